"""Simple undirected graphs, the generators used in the experiments, and
a few structural measurements (set-pair edge counts, giant component).

Vertices are dense integer ids ``0 .. n-1``. Graphs are stored in CSR form
(``indptr``/``indices``) with every neighbor list sorted ascending, which is
also the layout the jitted simulation kernels consume.
"""

from __future__ import annotations

import io
import math
import os
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, TextIO

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

from .errors import GenerationError, InvalidParameterError


class Graph:
    """Immutable simple undirected graph.

    Build one with :meth:`from_edges` or a generator; the constructor
    trusts its CSR input.
    """

    __slots__ = ("n", "indptr", "indices", "degrees", "m")

    def __init__(self, n: int, indptr: np.ndarray, indices: np.ndarray):
        self.n = int(n)
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int64)
        self.indptr.setflags(write=False)
        self.indices.setflags(write=False)
        self.degrees = np.diff(self.indptr)
        self.degrees.setflags(write=False)
        self.m = int(self.degrees.sum()) // 2

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]] | np.ndarray) -> Graph:
        if n < 0:
            raise InvalidParameterError(f"vertex count must be nonnegative, got {n}")
        arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
        arr = arr.reshape(-1, 2)
        if arr.size and (arr.min() < 0 or arr.max() >= n):
            raise InvalidParameterError("edge endpoint out of range")
        if np.any(arr[:, 0] == arr[:, 1]):
            raise InvalidParameterError("self-loops are not allowed")
        lo = np.minimum(arr[:, 0], arr[:, 1])
        hi = np.maximum(arr[:, 0], arr[:, 1])
        if len(np.unique(lo * max(n, 1) + hi)) != len(lo):
            raise InvalidParameterError("parallel edges are not allowed")
        src = np.concatenate([lo, hi])
        dst = np.concatenate([hi, lo])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        return cls(n, indptr, dst)

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v] : self.indptr[v + 1]]

    @property
    def adjacency(self) -> list[np.ndarray]:
        return [self.neighbors(v) for v in range(self.n)]

    def edges(self) -> np.ndarray:
        """All edges as an ``(m, 2)`` array with ``u < v``, lexicographically sorted."""
        src = np.repeat(np.arange(self.n, dtype=np.int64), self.degrees)
        keep = src < self.indices
        return np.column_stack([src[keep], self.indices[keep]])

    def has_edge(self, u: int, v: int) -> bool:
        nb = self.neighbors(u)
        i = np.searchsorted(nb, v)
        return bool(i < len(nb) and nb[i] == v)

    def to_sparse(self) -> csr_matrix:
        data = np.ones(len(self.indices), dtype=np.float64)
        return csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
        )

    def __hash__(self) -> int:
        return hash((self.n, self.indices.tobytes()))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m})"


# -- deterministic families ---------------------------------------------------


def make_star(n_leaves: int) -> Graph:
    """Star with center 0 and leaves ``1 .. n_leaves``."""
    if n_leaves < 1:
        raise InvalidParameterError(f"a star needs at least one leaf, got {n_leaves}")
    return Graph.from_edges(n_leaves + 1, [(0, v) for v in range(1, n_leaves + 1)])


def make_clique(k: int) -> Graph:
    if k < 1:
        raise InvalidParameterError(f"clique size must be positive, got {k}")
    iu, ju = np.triu_indices(k, 1)
    return Graph.from_edges(k, np.column_stack([iu, ju]))


def make_path(n: int) -> Graph:
    if n < 1:
        raise InvalidParameterError(f"path needs at least one vertex, got {n}")
    return Graph.from_edges(n, [(v, v + 1) for v in range(n - 1)])


def make_cycle(n: int) -> Graph:
    if n < 3:
        raise InvalidParameterError(f"cycle needs at least three vertices, got {n}")
    return Graph.from_edges(n, [(v, (v + 1) % n) for v in range(n)])


def disjoint_union(*graphs: Graph) -> Graph:
    edges, offset = [], 0
    for g in graphs:
        edges.append(g.edges() + offset)
        offset += g.n
    return Graph.from_edges(offset, np.concatenate(edges) if edges else np.empty((0, 2)))


# -- random families ----------------------------------------------------------


def gen_erdos_renyi(n: int, p: float, seed: int) -> Graph:
    """G(n, p): every pair independently with probability ``p``."""
    if not 0.0 <= p <= 1.0:
        raise InvalidParameterError(f"p must lie in [0, 1], got {p}")
    if n < 0:
        raise InvalidParameterError(f"vertex count must be nonnegative, got {n}")
    rng = np.random.default_rng(seed)
    chunks = []
    for u in range(n - 1):
        hits = np.flatnonzero(rng.random(n - u - 1) < p)
        if len(hits):
            chunks.append(np.column_stack([np.full(len(hits), u), hits + u + 1]))
    edges = np.concatenate(chunks) if chunks else np.empty((0, 2), dtype=np.int64)
    return Graph.from_edges(n, edges)


def gen_random_regular(n: int, d: int, seed: int, max_restarts: int = 1000) -> Graph:
    """Simple ``d``-regular graph from the pairing (configuration) model.

    Each round pairs all open stubs uniformly at random and keeps the pairs
    that form new simple edges; stubs from rejected pairs are re-paired in the
    next round. If the leftover stubs admit no valid pair the whole attempt is
    restarted. Not exactly uniform, but always simple and ``d``-regular.
    """
    if d < 0 or n < 0:
        raise InvalidParameterError("n and d must be nonnegative")
    if (n * d) % 2:
        raise InvalidParameterError(f"n*d must be even, got n={n}, d={d}")
    if d >= n and not (n == 0 and d == 0):
        raise InvalidParameterError(f"degree must be below n, got n={n}, d={d}")
    rng = np.random.default_rng(seed)
    if d == 0:
        return Graph.from_edges(n, np.empty((0, 2), dtype=np.int64))
    for _ in range(max_restarts):
        edges = _pair_stubs(n, d, rng)
        if edges is not None:
            return Graph.from_edges(n, np.array(sorted(edges), dtype=np.int64))
    raise GenerationError(f"no simple {d}-regular pairing found in {max_restarts} restarts")


def _pair_stubs(n: int, d: int, rng: np.random.Generator) -> set[tuple[int, int]] | None:
    edges: set[tuple[int, int]] = set()
    stubs = np.repeat(np.arange(n, dtype=np.int64), d)
    while len(stubs):
        rng.shuffle(stubs)
        leftover: dict[int, int] = defaultdict(int)
        for a, b in zip(stubs[0::2].tolist(), stubs[1::2].tolist()):
            if a > b:
                a, b = b, a
            if a != b and (a, b) not in edges:
                edges.add((a, b))
            else:
                leftover[a] += 1
                leftover[b] += 1
        if not leftover:
            break
        if not _has_valid_pair(edges, leftover):
            return None
        stubs = np.repeat(
            np.fromiter(leftover.keys(), dtype=np.int64),
            np.fromiter(leftover.values(), dtype=np.int64),
        )
    return edges


def _has_valid_pair(edges: set[tuple[int, int]], leftover: dict[int, int]) -> bool:
    verts = sorted(leftover)
    for i, a in enumerate(verts):
        for b in verts[i + 1 :]:
            if (a, b) not in edges:
                return True
    return False


@dataclass(frozen=True)
class HrgParams:
    """Parameters of the threshold hyperbolic random graph.

    ``alpha`` and the disk radius follow from ``gamma`` and the calibration
    to ``target_avg_degree``; they are filled in by :func:`gen_hyperbolic`.
    """

    n: int
    gamma: float
    target_avg_degree: float

    alpha: float = field(init=False)

    def __post_init__(self):
        if self.n < 0:
            raise InvalidParameterError(f"vertex count must be nonnegative, got {self.n}")
        if not 2.0 < self.gamma < 3.0:
            raise InvalidParameterError(f"gamma must lie strictly inside (2, 3), got {self.gamma}")
        if not self.target_avg_degree > 0:
            raise InvalidParameterError("target_avg_degree must be positive")
        object.__setattr__(self, "alpha", (self.gamma - 1.0) / 2.0)


@dataclass(frozen=True)
class HyperbolicGraph:
    """Generator output: the graph plus the embedding that produced it."""

    graph: Graph
    radii: np.ndarray
    angles: np.ndarray
    disk_radius: float


def gen_hyperbolic(params: HrgParams, seed: int, rel_tol: float = 0.1) -> HyperbolicGraph:
    """Threshold (temperature zero) hyperbolic random graph.

    Angles are uniform on the circle; radii have density
    ``alpha*sinh(alpha*r) / (cosh(alpha*R) - 1)`` on ``[0, R]``; two vertices
    are adjacent iff their hyperbolic distance is at most ``R``. The radius
    ``R = 2 ln n + C`` is found by bisection on ``C`` so that the realised
    average degree is within ``rel_tol`` of the target. The uniforms behind
    the radii are drawn once, so the search is deterministic per seed.
    """
    n, alpha = params.n, params.alpha
    rng = np.random.default_rng(seed)
    angles = rng.uniform(0.0, 2.0 * math.pi, size=n)
    u = rng.random(n)
    if n <= 1:
        radii = np.zeros(n)
        return HyperbolicGraph(Graph.from_edges(n, np.empty((0, 2))), radii, angles, 0.0)

    target = params.target_avg_degree
    # asymptotic average degree 2 alpha^2 e^{-C/2} / (pi (alpha - 1/2)^2) as a starting point
    c0 = -2.0 * math.log(target * math.pi * (alpha - 0.5) ** 2 / (2.0 * alpha**2))

    def realise(C: float):
        R = 2.0 * math.log(n) + C
        radii = np.arccosh(1.0 + (math.cosh(alpha * R) - 1.0) * u) / alpha
        edges = _hyperbolic_edges(radii, angles, R)
        return R, radii, edges, 2.0 * len(edges) / n

    lo, hi = c0 - 8.0, c0 + 8.0
    best = None
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        R, radii, edges, avg = realise(mid)
        if best is None or abs(avg - target) < abs(best[3] - target):
            best = (R, radii, edges, avg)
        if abs(avg - target) <= 0.02 * target:
            break
        if avg > target:
            lo = mid
        else:
            hi = mid
    R, radii, edges, avg = best
    if abs(avg - target) > rel_tol * target:
        raise GenerationError(f"could not calibrate average degree {target} (best {avg:.3f})")
    return HyperbolicGraph(Graph.from_edges(n, edges), radii, angles, R)


def _hyperbolic_edges(radii: np.ndarray, angles: np.ndarray, R: float, block: int = 512) -> np.ndarray:
    n = len(radii)
    ch, sh = np.cosh(radii), np.sinh(radii)
    cos_R = math.cosh(R)
    out = []
    for start in range(0, n, block):
        rows = np.arange(start, min(start + block, n))
        dtheta = np.pi - np.abs(np.pi - np.abs(angles[rows, None] - angles[None, :]))
        cosh_d = ch[rows, None] * ch[None, :] - sh[rows, None] * sh[None, :] * np.cos(dtheta)
        close = cosh_d <= cos_R
        close &= np.arange(n)[None, :] > rows[:, None]
        i, j = np.nonzero(close)
        out.append(np.column_stack([rows[i], j]))
    return np.concatenate(out)


def hill_tail_exponent(values: np.ndarray, top_fraction: float = 0.1) -> float:
    """Hill estimate of the power-law exponent ``gamma`` of a sample.

    Uses the top ``top_fraction`` order statistics; the returned value is the
    density exponent, i.e. one plus the tail index.
    """
    x = np.sort(np.asarray(values, dtype=float))[::-1]
    k = max(2, int(top_fraction * len(x)))
    if k >= len(x) or x[k] <= 0:
        raise InvalidParameterError("not enough positive values for a Hill estimate")
    tail_index = 1.0 / np.mean(np.log(x[:k] / x[k]))
    return 1.0 + tail_index


# -- measurements -------------------------------------------------------------


def _vertex_mask(G: Graph, vertices: Iterable[int]) -> np.ndarray:
    ids = np.fromiter(vertices, dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= G.n):
        raise InvalidParameterError("vertex id out of range")
    mask = np.zeros(G.n, dtype=bool)
    mask[ids] = True
    return mask


def count_edges_between(G: Graph, X: Iterable[int], Y: Iterable[int]) -> int:
    """Number of pairs ``(x, y)`` with ``x in X``, ``y in Y`` and ``{x, y}`` an edge.

    An edge with both endpoints in ``X & Y`` is therefore counted twice.
    """
    mx, my = _vertex_mask(G, X), _vertex_mask(G, Y)
    src = np.repeat(np.arange(G.n), G.degrees)
    return int(np.count_nonzero(mx[src] & my[G.indices]))


def giant_component(G: Graph) -> np.ndarray:
    """Sorted vertex ids of the largest component (ties: smallest vertex id)."""
    if G.n == 0:
        return np.empty(0, dtype=np.int64)
    _, labels = connected_components(G.to_sparse(), directed=False)
    sizes = np.bincount(labels)
    largest = np.flatnonzero(sizes == sizes.max())
    first_vertex = np.array([np.argmax(labels == lab) for lab in largest])
    return np.flatnonzero(labels == largest[np.argmin(first_vertex)])


def giant_component_diameter(G: Graph, block: int = 256) -> tuple[int, int]:
    """``(size, diameter)`` of the giant component, exact via BFS from every vertex."""
    if G.n < 1:
        raise InvalidParameterError("graph must have at least one vertex")
    comp = giant_component(G)
    sub = G.to_sparse()[comp][:, comp]
    diameter = 0
    for start in range(0, len(comp), block):
        dist = shortest_path(sub, directed=False, unweighted=True, indices=np.arange(start, min(start + block, len(comp))))
        diameter = max(diameter, int(dist.max()))
    return len(comp), diameter


# -- text format --------------------------------------------------------------


def write_graph(G: Graph, dest: str | os.PathLike | TextIO) -> None:
    """Write ``n m`` followed by one ``u v`` line per edge (``u < v``, sorted)."""
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w") as fh:
            write_graph(G, fh)
        return
    dest.write(f"{G.n} {G.m}\n")
    for u, v in G.edges().tolist():
        dest.write(f"{u} {v}\n")


def read_graph(src: str | os.PathLike | TextIO) -> Graph:
    if isinstance(src, (str, os.PathLike)):
        with open(src) as fh:
            return read_graph(fh)
    header = src.readline().split()
    if len(header) != 2:
        raise InvalidParameterError("graph header must be 'n m'")
    n, m = int(header[0]), int(header[1])
    edges = np.loadtxt(src, dtype=np.int64, ndmin=2) if m else np.empty((0, 2), dtype=np.int64)
    if edges.shape != (m, 2):
        raise InvalidParameterError(f"expected {m} edge lines, found {edges.shape[0]}")
    return Graph.from_edges(n, edges)


def graph_to_text(G: Graph) -> str:
    buf = io.StringIO()
    write_graph(G, buf)
    return buf.getvalue()
