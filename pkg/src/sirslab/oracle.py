"""Exact expected survival times by absorbing-chain linear solves.

For transient states ``x`` the expected time to extinction solves
``q(x) t(x) - sum_y q(x, y) t(y) = 1`` with ``t = 0`` on absorbing states.

Stars lump to ``(center state, s, i, r)`` leaf counts: leaves attach only to
the center, so leaves in the same state are exchangeable and the leaf
counts form a Markov chain on their own. Cliques lump to ``(i, r)`` for the
same reason. Both lumpings are cross-checked against the full-state-space
solver on small instances in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .dynamics import Mode, State
from .errors import InvalidParameterError, NumericError, SizeError
from .graphs import Graph

RESIDUAL_TOL = 1e-10
TINY_SIRS_MAX_N = 10
TINY_SIS_MAX_N = 16
# beyond this, a failed Krylov solve skips the direct factorization
KRYLOV_DIRECT_MAX = 20000


@dataclass(frozen=True)
class LumpedStarState:
    center: State
    s: int
    i: int
    r: int = 0

    def __post_init__(self):
        object.__setattr__(self, "center", State(self.center))
        if min(self.s, self.i, self.r) < 0:
            raise InvalidParameterError("leaf counts must be nonnegative")

    @property
    def n_leaves(self) -> int:
        return self.s + self.i + self.r

    @property
    def absorbing(self) -> bool:
        return self.i == 0 and self.center != State.I


@dataclass(frozen=True)
class LumpedCliqueState:
    i: int
    r: int = 0

    def __post_init__(self):
        if min(self.i, self.r) < 0:
            raise InvalidParameterError("counts must be nonnegative")

    @property
    def absorbing(self) -> bool:
        return self.i == 0


@dataclass(frozen=True)
class OracleResult:
    expected_T: float
    states: int
    residual: float

    def __float__(self) -> float:
        return self.expected_T


def solve_absorption(rows: np.ndarray, cols: np.ndarray, rates: np.ndarray, n_states: int,
                     method: str = "direct") -> tuple[np.ndarray, float]:
    """Expected absorption times given transient-to-transient transitions.

    ``rows``/``cols``/``rates`` list every transition out of a transient state;
    transitions into absorbing states carry ``cols == -1``.

    ``method="direct"`` factorizes with SuperLU. ``method="krylov"`` runs
    Jacobi-preconditioned GMRES first; brute-force systems have a hypercube
    structure whose LU fill-in is ruinous, while their Krylov convergence is
    fast. Any attempt that misses the residual target falls through to the
    next one (direct, then damped Gauss-Seidel); if all fail, NumericError.
    """
    out_rate = np.bincount(rows, weights=rates, minlength=n_states)
    if np.any(out_rate <= 0):
        raise NumericError("a transient state has no outgoing transitions")
    keep = cols >= 0
    A = sp.csr_matrix((-rates[keep], (rows[keep], cols[keep])), shape=(n_states, n_states))
    A = (A + sp.diags(out_rate)).tocsr()
    b = np.ones(n_states)
    t = None
    if method == "krylov":
        t, _ = spla.gmres(A, b, M=sp.diags(1.0 / out_rate), rtol=1e-12, atol=0.0, restart=100, maxiter=50)
        if _relative_residual(A, t, b) > RESIDUAL_TOL and n_states <= KRYLOV_DIRECT_MAX:
            t = None
    elif method != "direct":
        raise InvalidParameterError(f"unknown solve method {method!r}")
    if t is None:
        t = spla.spsolve(A.tocsc(), b)
    residual = _relative_residual(A, t, b)
    if not np.all(np.isfinite(t)) or residual > RESIDUAL_TOL:
        t = _gauss_seidel(A, b, t if np.all(np.isfinite(t)) else np.zeros(n_states))
        residual = _relative_residual(A, t, b)
        if residual > RESIDUAL_TOL:
            raise NumericError(f"absorption solve did not converge (relative residual {residual:.2e})")
    return t, residual


def _relative_residual(A, t: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(A @ t - b) / (np.linalg.norm(A.diagonal() * t) + np.linalg.norm(b)))


def _gauss_seidel(A: sp.csr_matrix, b: np.ndarray, x: np.ndarray, omega: float = 0.9,
                  tol: float = 1e-12, max_sweeps: int = 10**6) -> np.ndarray:
    lower = sp.tril(A, format="csr")
    upper = sp.triu(A, k=1, format="csr")
    for _ in range(max_sweeps):
        new = spla.spsolve_triangular(lower, b - upper @ x, lower=True)
        new = omega * new + (1.0 - omega) * x
        if np.max(np.abs(new - x)) <= tol * max(1.0, np.max(np.abs(new))):
            return new
        x = new
    raise NumericError("Gauss-Seidel fallback hit its sweep limit")


# -- star ---------------------------------------------------------------------


def _star_index(n: int):
    # transient states are (center, i, r) with s = n - i - r; center I always transient
    index = {}
    for center in (State.S, State.I, State.R):
        for i in range(n + 1):
            for r in range(n - i + 1):
                if i == 0 and center != State.I:
                    continue
                index[(center, i, r)] = len(index)
    return index


def _star_solve(n: int, lam: float, rho: float):
    index = _star_index(n)
    rows, cols, rates = [], [], []

    def add(a, target, rate):
        if rate > 0:
            rows.append(a)
            cols.append(index.get(target, -1))
            rates.append(rate)

    for (center, i, r), a in index.items():
        s = n - i - r
        if center == State.I:
            add(a, (center, i + 1, r), lam * s)
            add(a, (State.R, i, r), 1.0)
        elif center == State.S:
            add(a, (State.I, i, r), lam * i)
        else:
            add(a, (State.S, i, r), rho)
        add(a, (center, i - 1, r + 1), float(i))
        add(a, (center, i, r - 1), rho * r)
    t, residual = solve_absorption(np.array(rows), np.array(cols), np.array(rates), len(index))
    return index, t, residual


def star_exact_expected_survival(n_leaves: int, lam: float, rho: float, init: LumpedStarState) -> OracleResult:
    """Exact SIRS survival time on a star with ``n_leaves`` leaves."""
    if n_leaves < 1:
        raise InvalidParameterError("a star needs at least one leaf")
    if init.n_leaves != n_leaves:
        raise InvalidParameterError("leaf counts do not add up to n_leaves")
    if init.absorbing:
        return OracleResult(0.0, 0, 0.0)
    index, t, residual = _star_solve(n_leaves, lam, rho)
    return OracleResult(float(t[index[(init.center, init.i, init.r)]]), len(index), residual)


def star_worst_start(n_leaves: int, lam: float, rho: float) -> tuple[LumpedStarState, OracleResult]:
    """The transient start with the largest expected survival time, and that value."""
    if n_leaves < 1:
        raise InvalidParameterError("a star needs at least one leaf")
    index, t, residual = _star_solve(n_leaves, lam, rho)
    best = int(np.argmax(t))
    center, i, r = next(key for key, a in index.items() if a == best)
    return LumpedStarState(center, n_leaves - i - r, i, r), OracleResult(float(t[best]), len(index), residual)


# -- clique -------------------------------------------------------------------


def clique_exact_expected_survival(k: int, lam: float, rho: float, init: LumpedCliqueState) -> OracleResult:
    """Exact SIRS survival time on ``K_k`` from ``i`` infected, ``r`` recovered."""
    if k < 1:
        raise InvalidParameterError("clique size must be positive")
    if init.i + init.r > k:
        raise InvalidParameterError("more infected and recovered vertices than clique size")
    if init.absorbing:
        return OracleResult(0.0, 0, 0.0)
    index = {}
    for i in range(1, k + 1):
        for r in range(k - i + 1):
            index[(i, r)] = len(index)
    rows, cols, rates = [], [], []
    for (i, r), a in index.items():
        s = k - i - r
        for rate, target in ((lam * i * s, (i + 1, r)), (float(i), (i - 1, r + 1)), (rho * r, (i, r - 1))):
            if rate > 0:
                rows.append(a)
                cols.append(index.get(target, -1))
                rates.append(rate)
    t, residual = solve_absorption(np.array(rows), np.array(cols), np.array(rates), len(index))
    return OracleResult(float(t[index[(init.i, init.r)]]), len(index), residual)


# -- full state space ---------------------------------------------------------


def tiny_exact_expected_survival(G: Graph, lam: float, rho: float, init, mode: Mode | str = Mode.SIRS) -> OracleResult:
    """Exact survival time over the whole configuration space of a tiny graph.

    ``init`` is a per-vertex state sequence (0 = S, 1 = I, 2 = R). SIRS is
    limited to 10 vertices (3^n states), SIS to 16 (2^n states).
    """
    mode = Mode(mode)
    n = G.n
    base = 2 if mode is Mode.SIS else 3
    cap = TINY_SIS_MAX_N if mode is Mode.SIS else TINY_SIRS_MAX_N
    if n > cap:
        raise SizeError(f"{mode.value} brute force is limited to n <= {cap}, got {n}")
    init = np.asarray(init, dtype=np.int64)
    if init.shape != (n,) or init.min(initial=0) < 0 or init.max(initial=0) >= base:
        raise InvalidParameterError("init must hold one valid state per vertex")
    if not np.any(init == State.I):
        return OracleResult(0.0, 0, 0.0)

    codes = np.arange(base**n, dtype=np.int64)
    powers = base ** np.arange(n, dtype=np.int64)
    digits = (codes[:, None] // powers[None, :]) % base
    transient = np.any(digits == State.I, axis=1)
    tid = np.full(len(codes), -1, dtype=np.int64)
    tid[transient] = np.arange(np.count_nonzero(transient))
    T = codes[transient]
    D = digits[transient]
    inf_nb = (D == State.I).astype(np.int64) @ G.to_sparse().toarray().astype(np.int64) if n else D

    rows, cols, rates = [], [], []
    src = np.arange(len(T))
    for v in range(n):
        dv = D[:, v]
        is_s, is_i, is_r = dv == State.S, dv == State.I, dv == State.R
        # infection of v by each infected neighbor
        sel = is_s & (inf_nb[:, v] > 0)
        rows.append(src[sel]); cols.append(tid[T[sel] + powers[v]]); rates.append(lam * inf_nb[sel, v])
        # recovery: I -> R (SIRS) or I -> S (SIS)
        shift = -powers[v] if mode is Mode.SIS else powers[v]
        rows.append(src[is_i]); cols.append(tid[T[is_i] + shift]); rates.append(np.ones(np.count_nonzero(is_i)))
        if mode is Mode.SIRS:
            rows.append(src[is_r]); cols.append(tid[T[is_r] - 2 * powers[v]])
            rates.append(np.full(np.count_nonzero(is_r), float(rho)))
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    rates = np.concatenate(rates).astype(float)
    t, residual = solve_absorption(rows, cols, rates, len(T), method="krylov")
    code = int(init @ powers)
    return OracleResult(float(t[tid[code]]), len(T), residual)


def star_state_from_config(states) -> LumpedStarState:
    """Lump a per-vertex star configuration (center = vertex 0)."""
    st = np.asarray(states)
    leaves = st[1:]
    return LumpedStarState(State(int(st[0])), int(np.sum(leaves == State.S)),
                           int(np.sum(leaves == State.I)), int(np.sum(leaves == State.R)))
