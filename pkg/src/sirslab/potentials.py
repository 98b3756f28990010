"""Potential functions for the SIRS drift analysis.

``f(x*, x) = x* (x/x* - ln(x/x*) - 1)`` is the Volterra-type Lyapunov
function; ``F(P, I) = f(n', P) + f(I*, I)`` combines it over the shifted
susceptible count ``P = S + (rho/c) n`` and the infected count ``I``.
``H(I, R) = I - eps_H R`` is the simpler potential for the initial growth
phase. Drifts are exact one-step expectations of the embedded jump chain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, InvalidParameterError
from .graphs import Graph


def f_value(x_star: float, x: float) -> float:
    if x_star <= 0 or x <= 0:
        raise DomainError(f"f is defined for positive arguments only, got ({x_star}, {x})")
    ratio = x / x_star
    return x_star * (ratio - math.log(ratio) - 1.0)


def f_diff(x_star: float, x: float, step: float) -> float:
    """``f(x*, x + step) - f(x*, x)`` without cancellation: ``step - x* ln(1 + step/x)``."""
    if x_star <= 0 or x <= 0 or x + step <= 0:
        raise DomainError("f is defined for positive arguments only")
    return step - x_star * math.log1p(step / x)


@dataclass(frozen=True)
class PotentialContext:
    n: int
    c: float
    rho: float
    n_prime: float = field(init=False)
    i_star: float = field(init=False)

    def __post_init__(self):
        if self.n < 1:
            raise InvalidParameterError(f"n must be positive, got {self.n}")
        if not self.c > 1:
            raise InvalidParameterError(f"the potential needs c > 1, got {self.c}")
        if not self.rho > 0:
            raise InvalidParameterError(f"rho must be positive, got {self.rho}")
        object.__setattr__(self, "n_prime", (1.0 + self.rho / self.c) * self.n)
        object.__setattr__(self, "i_star", self.rho * (self.c - 1.0) * self.n / ((1.0 + self.rho) * self.c))

    @property
    def s_star(self) -> float:
        """Mean-field equilibrium susceptible count ``n / c``."""
        return self.n / self.c

    @property
    def r_star(self) -> float:
        return (self.c - 1.0) * self.n / ((1.0 + self.rho) * self.c)


def make_context(n: int, c: float, rho: float) -> PotentialContext:
    return PotentialContext(n, c, rho)


def p_of(ctx: PotentialContext, S: float) -> float:
    return S + ctx.rho / ctx.c * ctx.n


def potential_F(ctx: PotentialContext, P: float, I: float) -> float:
    return f_value(ctx.n_prime, P) + f_value(ctx.i_star, I)


def potential_H(I: float, R: float, eps_H: float) -> float:
    if not eps_H > 0:
        raise InvalidParameterError(f"eps_H must be positive, got {eps_H}")
    return I - eps_H * R


@dataclass(frozen=True)
class RateVector:
    """Event rates of one configuration: outside infection, inside infection,
    recovery and deimmunization."""

    r_o: float
    r_si: float
    r_ir: float
    r_rs: float

    def __post_init__(self):
        if min(self.r_o, self.r_si, self.r_ir, self.r_rs) < 0:
            raise InvalidParameterError("rates must be nonnegative")

    @classmethod
    def from_counts(cls, lam: float, is_edges: float, I: int, R: int, rho: float, r_o: float = 0.0) -> RateVector:
        return cls(r_o=r_o, r_si=lam * is_edges, r_ir=float(I), r_rs=rho * R)

    @property
    def r_t(self) -> float:
        return self.r_o + self.r_si + self.r_ir + self.r_rs

    @property
    def p_o(self) -> float:
        return self.r_o / self.r_t

    @property
    def p_si(self) -> float:
        return self.r_si / self.r_t

    @property
    def p_ir(self) -> float:
        return self.r_ir / self.r_t

    @property
    def p_rs(self) -> float:
        return self.r_rs / self.r_t

    def with_r_o(self, r_o: float) -> RateVector:
        return RateVector(r_o, self.r_si, self.r_ir, self.r_rs)


def drift_H(rates: RateVector, eps_H: float) -> float:
    """Expected one-step change of ``H = I - eps_H R``."""
    if rates.r_t <= 0:
        raise DomainError("drift undefined when the total rate is zero")
    up = rates.r_o + rates.r_si
    return (up - rates.r_ir * (1.0 + eps_H) + rates.r_rs * eps_H) / rates.r_t


@dataclass(frozen=True)
class FDrift:
    value: float
    boundary: bool = False  # True when I = 1; then value only bounds the drift from below

    def __float__(self) -> float:
        return self.value


def drift_F(ctx: PotentialContext, P: float, I: int, rates: RateVector, *, rate_tol: float = 1e-9) -> FDrift:
    """Expected one-step change of ``F`` under the embedded jump chain.

    Recovery and deimmunization rates must match the counts exactly
    (``r_ir = I`` and ``r_rs = rho R`` with ``R = round(n' - P - I)``).
    At ``I = 1`` the recovery move would leave the domain of ``F``; its
    contribution is dropped and the result is flagged as a boundary value.
    """
    if I < 1:
        raise DomainError("F drift is undefined without infected vertices")
    if rates.r_t <= 0:
        raise DomainError("drift undefined when the total rate is zero")
    R = round(ctx.n_prime - P - I)
    if R < 0:
        raise InvalidParameterError(f"inconsistent counts: P={P}, I={I} exceed n'={ctx.n_prime}")
    if abs(rates.r_ir - I) > rate_tol * max(1.0, I) or abs(rates.r_rs - ctx.rho * R) > rate_tol * max(1.0, ctx.rho * R):
        raise InvalidParameterError("recovery/deimmunization rates do not match the counts")
    ns, istar = ctx.n_prime, ctx.i_star
    total = 0.0
    up = rates.r_o + rates.r_si
    if up > 0:
        total += up * (f_diff(ns, P, -1.0) + f_diff(istar, I, 1.0))
    boundary = I == 1
    if rates.r_ir > 0 and not boundary:
        total += rates.r_ir * f_diff(istar, I, -1.0)
    if rates.r_rs > 0:
        total += rates.r_rs * f_diff(ns, P, 1.0)
    return FDrift(total / rates.r_t, boundary)


def mean_field_rates(ctx: PotentialContext, S: float, I: int, R: int, r_o: float = 0.0) -> RateVector:
    """Rates with the clique-like infection pressure ``(c/n) I S``."""
    return RateVector(r_o, ctx.c / ctx.n * I * S, float(I), ctx.rho * R)


# -- region scanner -----------------------------------------------------------


@dataclass
class DriftMap:
    I_grid: np.ndarray
    R_grid: np.ndarray
    max_drift: np.ndarray   # shape (len(I_grid), len(R_grid)); NaN for infeasible cells
    mean_drift: np.ndarray
    a_threshold: float
    band: tuple[int, int] | None  # (I_lo, I_hi) of the widest contiguous negative band

    def band_members(self) -> np.ndarray:
        if self.band is None:
            return np.zeros(len(self.I_grid), dtype=bool)
        return (self.I_grid >= self.band[0]) & (self.I_grid <= self.band[1])

    def rows(self):
        members = self.band_members()
        for a, I in enumerate(self.I_grid):
            for b, R in enumerate(self.R_grid):
                if not np.isnan(self.max_drift[a, b]):
                    yield int(I), int(R), float(self.max_drift[a, b]), float(self.mean_drift[a, b]), bool(members[a])


def region_scan(
    G: Graph | None,
    ctx: PotentialContext,
    lam: float,
    I_grid: Sequence[int],
    R_grid: Sequence[int],
    samples_per_cell: int = 1,
    seed: int = 0,
    a_threshold: float = 0.01,
) -> DriftMap:
    """Evaluate the F drift over a grid of ``(I, R)`` counts.

    With ``G=None`` the infection pressure is the mean-field ``(c/n) I S`` and
    one evaluation per cell suffices. Otherwise each cell draws
    ``samples_per_cell`` uniformly random placements of ``I`` infected and
    ``R`` recovered vertices and uses the measured ``lambda E(I, S)``.
    Cells with ``I + R > n`` are skipped and ``I = 1`` is excluded.
    The band is the widest run of consecutive ``I`` values whose maximum
    drift over all feasible ``R`` is at most ``-a_threshold``.
    """
    I_grid = np.asarray(I_grid, dtype=np.int64)
    R_grid = np.asarray(R_grid, dtype=np.int64)
    n = ctx.n
    if G is not None and G.n != n:
        raise InvalidParameterError("context size does not match the graph")
    if I_grid.size == 0 or R_grid.size == 0:
        raise InvalidParameterError("grids must be nonempty")
    if I_grid.min() < 2 or I_grid.max() > n or R_grid.min() < 0 or R_grid.max() > n:
        raise InvalidParameterError("I grid must lie in [2, n] and R grid in [0, n]")
    if np.any(np.diff(I_grid) <= 0):
        raise InvalidParameterError("I grid must be strictly increasing")
    if samples_per_cell < 1:
        raise InvalidParameterError("samples_per_cell must be positive")

    max_d = np.full((len(I_grid), len(R_grid)), np.nan)
    mean_d = np.full_like(max_d, np.nan)
    A = G.to_sparse() if G is not None else None
    for a, I in enumerate(I_grid.tolist()):
        for b, R in enumerate(R_grid.tolist()):
            if I + R > n:
                continue
            S = n - I - R
            P = p_of(ctx, S)
            if A is None:
                vals = [drift_F(ctx, P, I, mean_field_rates(ctx, S, I, R)).value]
            else:
                rng = np.random.default_rng([seed, a, b])
                vals = []
                for e in _sampled_is_edges(A, n, I, R, samples_per_cell, rng):
                    vals.append(drift_F(ctx, P, I, RateVector.from_counts(lam, e, I, R, ctx.rho)).value)
            max_d[a, b] = max(vals)
            mean_d[a, b] = float(np.mean(vals))

    row_max = np.nanmax(max_d, axis=1)
    ok = row_max <= -a_threshold
    band, best, start = None, 0, None
    for idx, flag in enumerate(list(ok) + [False]):
        if flag and start is None:
            start = idx
        elif not flag and start is not None:
            if idx - start > best:
                best, band = idx - start, (int(I_grid[start]), int(I_grid[idx - 1]))
            start = None
    return DriftMap(I_grid, R_grid, max_d, mean_d, a_threshold, band)


def _sampled_is_edges(A, n: int, I: int, R: int, count: int, rng: np.random.Generator) -> np.ndarray:
    perm = np.argsort(rng.random((count, n)), axis=1)
    inf = np.zeros((count, n))
    sus = np.zeros((count, n))
    rows = np.arange(count)[:, None]
    inf[rows, perm[:, :I]] = 1.0
    sus[rows, perm[:, I + R:]] = 1.0
    return np.rint(np.einsum("ij,ij->i", (A @ inf.T).T, sus))


def random_placement(n: int, I: int, R: int, rng: np.random.Generator) -> np.ndarray:
    """States array with ``I`` infected and ``R`` recovered vertices placed uniformly."""
    st = np.zeros(n, dtype=np.int8)
    perm = rng.permutation(n)
    st[perm[:I]] = 1
    st[perm[I:I + R]] = 2
    return st
