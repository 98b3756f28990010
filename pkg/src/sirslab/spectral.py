"""Normalized-Laplacian spectra, expander certificates and empirical checks
of the expander edge-density inequalities."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateDegreeError, InvalidParameterError
from .graphs import Graph

MAX_DENSE_N = 2000


class NotAnExpanderError(InvalidParameterError):
    """A vertex degree falls outside the band ``[(1-eps_d) d, (1+eps_d) d]``."""

    def __init__(self, vertex: int, degree: int, low: float, high: float):
        super().__init__(f"vertex {vertex} has degree {degree}, outside [{low:g}, {high:g}]")
        self.vertex = vertex
        self.degree = degree
        self.low = low
        self.high = high


@dataclass(frozen=True)
class ExpanderCertificate:
    n: int
    d: float
    eps_d: float
    delta: float
    d_min: int
    d_max: int


def _check_degrees(G: Graph) -> None:
    if G.n and G.degrees.min() == 0:
        v = int(np.argmin(G.degrees))
        raise DegenerateDegreeError(f"vertex {v} is isolated; normalized Laplacian undefined")


def normalized_laplacian(G: Graph) -> np.ndarray:
    """Dense ``L = I - D^{-1/2} A D^{-1/2}``."""
    _check_degrees(G)
    inv_sqrt = 1.0 / np.sqrt(G.degrees.astype(float))
    L = np.eye(G.n)
    src = np.repeat(np.arange(G.n), G.degrees)
    L[src, G.indices] = -inv_sqrt[src] * inv_sqrt[G.indices]
    return L


def laplacian_spectrum(G: Graph) -> np.ndarray:
    """Eigenvalues of the normalized Laplacian in ascending order."""
    if G.n > MAX_DENSE_N:
        raise InvalidParameterError(f"dense eigensolver limited to n <= {MAX_DENSE_N}, got {G.n}")
    return np.linalg.eigvalsh(normalized_laplacian(G))


def expansion_from_spectrum(eigenvalues: np.ndarray) -> float:
    return float(np.max(np.abs(1.0 - np.sort(eigenvalues)[1:])))


def spectral_expansion(G: Graph) -> float:
    """``max_{i >= 2} |1 - lambda_i|`` over the sorted Laplacian eigenvalues."""
    if G.n < 2:
        raise InvalidParameterError("spectral expansion needs at least two vertices")
    return expansion_from_spectrum(laplacian_spectrum(G))


def certify_expander(G: Graph, d: float, eps_d: float, delta: float | None = None) -> ExpanderCertificate:
    """Check the degree band and measure ``delta``.

    Raises :class:`NotAnExpanderError` naming the first vertex whose degree is
    outside the band. A precomputed ``delta`` may be supplied for graphs too
    large for the dense eigensolver.
    """
    if not d > 0:
        raise InvalidParameterError(f"nominal degree must be positive, got {d}")
    if eps_d < 0:
        raise InvalidParameterError(f"eps_d must be nonnegative, got {eps_d}")
    low, high = (1.0 - eps_d) * d, (1.0 + eps_d) * d
    bad = np.flatnonzero((G.degrees < low) | (G.degrees > high))
    if len(bad):
        v = int(bad[0])
        raise NotAnExpanderError(v, int(G.degrees[v]), low, high)
    if delta is None:
        delta = spectral_expansion(G)
    return ExpanderCertificate(
        n=G.n, d=float(d), eps_d=float(eps_d), delta=float(delta),
        d_min=int(G.degrees.min()), d_max=int(G.degrees.max()),
    )


@dataclass
class DensityReport:
    pairs_checked: int = 0
    cut_violations: int = 0
    density_violations: int = 0
    cut_worst_slack: float = math.inf
    density_worst_slack: float = math.inf
    density_checked: bool = False
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.cut_violations == 0 and self.density_violations == 0


def cut_lower_bound(cert: ExpanderCertificate, size_x: int) -> float:
    """``(1 - delta)(1 - 3 eps_d) d |X| |X^c| / n``."""
    return (1.0 - cert.delta) * (1.0 - 3.0 * cert.eps_d) * cert.d * size_x * (cert.n - size_x) / cert.n


def density_tolerance(cert: ExpanderCertificate, size_x: int, size_y: int) -> float:
    """Allowed deviation ``4 eps_d d |X||Y|/n + 2 delta d sqrt(|X||Y|)``."""
    xy = size_x * size_y
    return 4.0 * cert.eps_d * cert.d * xy / cert.n + 2.0 * cert.delta * cert.d * math.sqrt(xy)


def _random_subsets(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    # sizes uniform over 0..n so small and large sets are both exercised
    sizes = rng.integers(0, n + 1, size=count)
    keys = rng.random((count, n))
    ranks = np.argsort(np.argsort(keys, axis=1), axis=1)
    return ranks < sizes[:, None]


def check_edge_density_bounds(
    G: Graph, cert: ExpanderCertificate, num_pairs: int, seed: int, batch: int = 256
) -> DensityReport:
    """Test the cut and edge-density bounds on random and extremal subset pairs.

    The lower bound on ``E(X, X^c)`` is checked for every sampled ``X``; the
    two-sided bound on ``E(X, Y)`` only when ``eps_d <= 1/5``.
    """
    if cert.n != G.n:
        raise InvalidParameterError("certificate does not belong to this graph")
    report = DensityReport(density_checked=cert.eps_d <= 0.2)
    A = G.to_sparse()
    n = G.n
    rng = np.random.default_rng(seed)

    fixed_x = [np.zeros(n, bool), np.ones(n, bool)]
    fixed_y = [np.zeros(n, bool), np.ones(n, bool)]
    for v in range(min(n, 4)):
        x = np.zeros(n, bool)
        x[v] = True
        fixed_x.append(x)
        fixed_y.append(~x)
    _check_batch(A, cert, np.array(fixed_x), np.array(fixed_y), report)

    remaining = num_pairs
    while remaining > 0:
        k = min(batch, remaining)
        _check_batch(A, cert, _random_subsets(n, k, rng), _random_subsets(n, k, rng), report)
        remaining -= k
    return report


def _check_batch(A, cert: ExpanderCertificate, X: np.ndarray, Y: np.ndarray, report: DensityReport) -> None:
    Xf, Yf = X.astype(float), Y.astype(float)
    sx, sy = X.sum(axis=1), Y.sum(axis=1)
    # E(X, X^c) and E(X, Y) for the whole batch through sparse products
    AX = (A @ Xf.T).T
    e_cut = np.rint(np.einsum("ij,ij->i", AX, 1.0 - Xf))
    e_xy = np.rint(np.einsum("ij,ij->i", AX, Yf))
    for i in range(len(X)):
        slack26 = e_cut[i] - cut_lower_bound(cert, int(sx[i]))
        report.cut_worst_slack = min(report.cut_worst_slack, slack26)
        if slack26 < -1e-9:
            report.cut_violations += 1
            report.violations.append(("cut", int(sx[i]), float(e_cut[i])))
        if report.density_checked:
            target = cert.d * sx[i] * sy[i] / cert.n
            slack27 = density_tolerance(cert, int(sx[i]), int(sy[i])) - abs(e_xy[i] - target)
            report.density_worst_slack = min(report.density_worst_slack, slack27)
            if slack27 < -1e-9:
                report.density_violations += 1
                report.violations.append(("density", int(sx[i]), int(sy[i]), float(e_xy[i])))
    report.pairs_checked += len(X)


def find_dense_clique(G: Graph, ranking: np.ndarray | None = None, seeds: int = 32) -> np.ndarray:
    """Greedy clique: lower bound on the clique number.

    Candidates are scanned in ``ranking`` order (default: decreasing degree;
    for hyperbolic graphs pass increasing radius). Starting from each of the
    first ``seeds`` candidates, a vertex is added whenever it is adjacent to
    every current member. Returns the largest clique found, sorted.
    """
    if G.n == 0:
        return np.empty(0, dtype=np.int64)
    order = np.argsort(-G.degrees, kind="stable") if ranking is None else np.asarray(ranking)
    best: list[int] = []
    for s in order[:seeds].tolist():
        clique = [s]
        common = set(G.neighbors(s).tolist())
        for v in order.tolist():
            if v in common:
                clique.append(v)
                common &= set(G.neighbors(v).tolist())
                if not common:
                    break
        if len(clique) > len(best):
            best = clique
    return np.array(sorted(best), dtype=np.int64)


def spectral_summary(G: Graph) -> dict:
    eig = laplacian_spectrum(G)
    return {
        "n": G.n,
        "d_min": int(G.degrees.min()),
        "d_max": int(G.degrees.max()),
        "delta": expansion_from_spectrum(eig),
        "eigen_extremes": {"lambda_1": float(eig[0]), "lambda_2": float(eig[1]), "lambda_n": float(eig[-1])},
    }
