"""The continuous-time SIRS/SIS process on a graph.

Two engines simulate the same law:

* :func:`run_clock_engine` superposes every Poisson clock of the process
  (one per edge at rate ``lambda``, a recovery clock at rate 1 and a
  deimmunization clock at rate ``rho`` per vertex) and applies a trigger
  only when its precondition holds. Slow on large graphs but literal.
* :func:`run_direct_engine` is the Gillespie direct method over the active
  rates ``lambda*E(I,S)``, ``I`` and ``rho*R``. The infecting I-S edge is
  drawn through a Fenwick tree over infected vertices weighted by their
  susceptible-neighbor counts.

:func:`run_coupled_sis_sirs` drives an SIS and an SIRS copy from one clock
stream so that the SIRS infected set stays inside the SIS one.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from . import _kernels as K
from .errors import InvalidParameterError, InvariantViolation
from .graphs import Graph


class State(enum.IntEnum):
    S = K.SUS
    I = K.INF  # noqa: E741
    R = K.REC


class Mode(str, enum.Enum):
    SIRS = "SIRS"
    SIS = "SIS"


class EventKind(enum.IntEnum):
    INFECT = K.EV_INFECT
    RECOVER = K.EV_RECOVER
    DEIMMUNIZE = K.EV_DEIMMUNIZE


@dataclass(frozen=True)
class ProcessParams:
    lam: float
    rho: float = 1.0
    mode: Mode = Mode.SIRS

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if not self.lam > 0:
            raise InvalidParameterError(f"infection rate must be positive, got {self.lam}")
        if self.mode is Mode.SIRS and not self.rho > 0:
            raise InvalidParameterError(f"deimmunization rate must be positive, got {self.rho}")

    @property
    def sis(self) -> bool:
        return self.mode is Mode.SIS


@dataclass(frozen=True)
class Horizon:
    """Stop a trial at process time ``time`` or after ``events`` state changes."""

    time: float = 1e5
    events: int = 10**7

    def __post_init__(self):
        if not self.time > 0:
            raise InvalidParameterError(f"horizon time must be positive, got {self.time}")
        if not self.events > 0:
            raise InvalidParameterError(f"event cap must be positive, got {self.events}")


class Event(NamedTuple):
    time: float
    kind: EventKind
    vertex: int
    source: int = -1  # infecting neighbor for INFECT events


@dataclass
class SurvivalRecord:
    """Outcome of one trial.

    ``censored_by`` is ``"time"`` or ``"events"`` when the horizon stopped
    the run; for time censoring ``survival_time`` equals the time horizon.
    """

    trial_index: int
    seed: int
    survival_time: float
    steps: int
    censored: bool
    horizon: Horizon
    censored_by: str | None = None
    events: list[Event] | None = field(default=None, repr=False)
    final_states: np.ndarray | None = field(default=None, repr=False)


class Configuration:
    """Per-vertex S/I/R states on a graph with derived counts.

    ``is_edge_count`` is the number of edges joining an infected and a
    susceptible vertex; ``susceptible_neighbors[v]`` is the number of
    susceptible neighbors of ``v`` (every vertex, not only infected ones).
    """

    def __init__(self, G: Graph, states: Iterable[int] | np.ndarray):
        st = np.asarray(states, dtype=np.int8).copy()
        if st.shape != (G.n,):
            raise InvalidParameterError(f"expected {G.n} states, got shape {st.shape}")
        if st.size and (st.min() < 0 or st.max() > 2):
            raise InvalidParameterError("states must be 0 (S), 1 (I) or 2 (R)")
        st.setflags(write=False)
        self.graph = G
        self.states = st
        self.S = int(np.count_nonzero(st == State.S))
        self.I = int(np.count_nonzero(st == State.I))
        self.R = int(np.count_nonzero(st == State.R))
        src = np.repeat(np.arange(G.n), G.degrees)
        self.susceptible_neighbors = np.bincount(
            src, weights=(st[G.indices] == State.S), minlength=G.n
        ).astype(np.int64)
        self.is_edge_count = int(self.susceptible_neighbors[st == State.I].sum())

    @classmethod
    def from_sets(cls, G: Graph, infected: Iterable[int], recovered: Iterable[int] = ()) -> Configuration:
        st = np.zeros(G.n, dtype=np.int8)
        inf = np.fromiter(infected, dtype=np.int64)
        rec = np.fromiter(recovered, dtype=np.int64)
        for ids in (inf, rec):
            if ids.size and (ids.min() < 0 or ids.max() >= G.n):
                raise InvalidParameterError("vertex id out of range")
        if np.intersect1d(inf, rec).size:
            raise InvalidParameterError("a vertex cannot be both infected and recovered")
        st[inf] = State.I
        st[rec] = State.R
        return cls(G, st)

    @classmethod
    def single_infected(cls, G: Graph, vertex: int) -> Configuration:
        return cls.from_sets(G, [vertex])

    def infected(self) -> np.ndarray:
        return np.flatnonzero(self.states == State.I)

    def recount(self) -> int:
        return int(K.recount_is_edges(self.graph.indptr, self.graph.indices, self.states))

    def __repr__(self) -> str:
        return f"Configuration(S={self.S}, I={self.I}, R={self.R}, E(I,S)={self.is_edge_count})"


class _Run:
    """Mutable kernel state for one trial."""

    def __init__(self, G: Graph, init: Configuration, proj_mask: np.ndarray):
        n = G.n
        self.states = np.array(init.states, dtype=np.int8)
        self.sus = init.susceptible_neighbors.copy()
        weights = np.where(self.states == State.I, self.sus, 0).astype(np.int64)
        self.tree = np.zeros(n + 1, dtype=np.int64)
        K.fen_build(self.tree, weights)
        self.inf_list, self.inf_pos = _index_set(self.states == State.I)
        self.rec_list, self.rec_pos = _index_set(self.states == State.R)
        self.proj = proj_mask
        self.ctr = np.array(
            [init.S, init.I, init.R, init.is_edge_count, 0,
             int(np.count_nonzero((self.states == State.I) & proj_mask)), 0],
            dtype=np.int64,
        )
        self.tnow = np.zeros(1)


def _index_set(mask: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    members = np.flatnonzero(mask)
    lst = np.full(len(mask), -1, dtype=np.int64)
    lst[: len(members)] = members
    pos = np.full(len(mask), -1, dtype=np.int64)
    pos[members] = np.arange(len(members))
    return lst, pos


_NO_LOG = K.new_log(0)


def _check_init(G: Graph, params: ProcessParams, init: Configuration) -> None:
    if init.graph is not G and init.graph != G:
        raise InvalidParameterError("initial configuration belongs to a different graph")
    if params.sis and init.R:
        raise InvalidParameterError("SIS runs cannot start with recovered vertices")


def _drive(step, rng: np.random.Generator, log: bool):
    """Call ``step(rand, rpos, logbufs)`` until it reports a terminal status."""
    size = 256
    rand = rng.random(size)
    rpos = 0
    bufs = K.new_log(4096) if log else _NO_LOG
    events: list[Event] = []
    while True:
        status, rpos, lpos = step(rand, rpos, bufs)
        if log and lpos:
            t, kind, a, b = (arr[:lpos].tolist() for arr in bufs)
            for ti, ki, ai, bi in zip(t, kind, a, b):
                if ki == K.EV_INFECT:
                    events.append(Event(ti, EventKind.INFECT, bi, ai))
                else:
                    events.append(Event(ti, EventKind(ki), ai))
        if status == K.NEED_RAND:
            size = min(size * 4, 1 << 16)
            rand = rng.random(size)
            rpos = 0
        elif status == K.NEED_LOG:
            continue
        elif status == K.BROKEN:
            raise InvariantViolation("incremental counts diverged from a full recount")
        else:
            return status, (events if log else None)


def _simulate(engine: str, G: Graph, params: ProcessParams, init: Configuration, seed: int,
              horizon: Horizon, proj_mask: np.ndarray, log_events: bool, debug: bool,
              trial_index: int) -> SurvivalRecord:
    _check_init(G, params, init)
    run = _Run(G, init, proj_mask)
    rng = np.random.default_rng(seed)
    sis = params.sis
    rho = float(params.rho)
    if engine == "direct":
        def step(rand, rpos, bufs):
            return K.direct_kernel(
                G.indptr, G.indices, float(params.lam), rho, sis,
                run.states, run.sus, run.tree, run.inf_list, run.inf_pos, run.rec_list, run.rec_pos,
                run.ctr, run.tnow, run.proj,
                rand, rpos, float(horizon.time), int(horizon.events), *bufs, debug,
            )
    elif engine == "clock":
        edges = G.edges()
        eu, ev = np.ascontiguousarray(edges[:, 0]), np.ascontiguousarray(edges[:, 1])

        def step(rand, rpos, bufs):
            return K.clock_kernel(
                G.indptr, G.indices, eu, ev, float(params.lam), rho, sis,
                run.states, run.sus, run.tree, run.inf_list, run.inf_pos, run.rec_list, run.rec_pos,
                run.ctr, run.tnow, run.proj,
                rand, rpos, float(horizon.time), int(horizon.events), *bufs, debug,
            )
    else:
        raise InvalidParameterError(f"unknown engine {engine!r}")

    status, events = _drive(step, rng, log_events)
    if K.recount_is_edges(G.indptr, G.indices, run.states) != run.ctr[K.C_E]:
        raise InvariantViolation("I-S edge count diverged from a full recount")
    censored_by = {K.CAP_TIME: "time", K.CAP_EVENTS: "events"}.get(status)
    return SurvivalRecord(
        trial_index=trial_index,
        seed=seed,
        survival_time=float(run.tnow[0]),
        steps=int(run.ctr[K.C_PSTEPS]),
        censored=censored_by is not None,
        horizon=horizon,
        censored_by=censored_by,
        events=events,
        final_states=run.states,
    )


def run_direct_engine(G: Graph, params: ProcessParams, init: Configuration, seed: int,
                      horizon: Horizon = Horizon(), *, log_events: bool = False,
                      debug: bool = False, trial_index: int = 0) -> SurvivalRecord:
    """Simulate until extinction or the horizon with the direct method.

    With ``debug=True`` every event is followed by a full recount of the
    S/I/R counts and the I-S edge count.
    """
    return _simulate("direct", G, params, init, seed, horizon, np.ones(G.n, dtype=np.bool_),
                     log_events, debug, trial_index)


def run_clock_engine(G: Graph, params: ProcessParams, init: Configuration, seed: int,
                     horizon: Horizon = Horizon(), *, log_events: bool = False,
                     debug: bool = False, trial_index: int = 0) -> SurvivalRecord:
    """Simulate by superposing all clocks at constant total rate
    ``lambda*m + n + rho*n`` (``lambda*m + n`` for SIS)."""
    return _simulate("clock", G, params, init, seed, horizon, np.ones(G.n, dtype=np.bool_),
                     log_events, debug, trial_index)


def run_projected(G: Graph, subgraph_vertices: Iterable[int], params: ProcessParams,
                  init: Configuration, seed: int, horizon: Horizon = Horizon(), *,
                  engine: str = "direct", log_events: bool = False, debug: bool = False,
                  trial_index: int = 0) -> SurvivalRecord:
    """Simulate on all of ``G`` but stop once no subgraph vertex is infected.

    ``steps`` counts only state changes of subgraph vertices. With the whole
    vertex set as subgraph the record equals a plain run with the same seed.
    """
    ids = np.fromiter(subgraph_vertices, dtype=np.int64)
    if ids.size == 0:
        raise InvalidParameterError("projection subgraph must be nonempty")
    if ids.min() < 0 or ids.max() >= G.n:
        raise InvalidParameterError("subgraph vertex out of range")
    mask = np.zeros(G.n, dtype=np.bool_)
    mask[ids] = True
    return _simulate(engine, G, params, init, seed, horizon, mask, log_events, debug, trial_index)


class CoupledResult(NamedTuple):
    sis: SurvivalRecord
    sirs: SurvivalRecord
    inclusion_held: bool


def run_coupled_sis_sirs(G: Graph, params: ProcessParams, init: Configuration, seed: int,
                         horizon: Horizon = Horizon(), *, trial_index: int = 0) -> CoupledResult:
    """Run SIS and SIRS copies on one shared clock stream.

    Both start from ``init`` (which must have no recovered vertices). Every
    trigger is applied to both copies with the usual rules, and after every
    trigger the SIRS infected set is checked to be contained in the SIS one.
    """
    if init.R:
        raise InvalidParameterError("coupled runs must start without recovered vertices")
    _check_init(G, ProcessParams(params.lam, params.rho, Mode.SIRS), init)
    edges = G.edges()
    eu, ev = np.ascontiguousarray(edges[:, 0]), np.ascontiguousarray(edges[:, 1])
    sis_states = np.array(init.states, dtype=np.int8)
    sirs_states = sis_states.copy()
    cnt = np.array([init.I, init.I, 0, 0, 0], dtype=np.int64)
    tnow = np.zeros(1)
    t_sirs = np.full(1, -1.0)
    rng = np.random.default_rng(seed)

    def step(rand, rpos, bufs):
        status, rpos = K.coupled_kernel(
            eu, ev, float(params.lam), float(params.rho), sis_states, sirs_states, cnt, tnow, t_sirs,
            rand, rpos, float(horizon.time), int(horizon.events),
        )
        return status, rpos, 0

    status, _ = _drive(step, rng, False)
    censored_by = {K.CAP_TIME: "time", K.CAP_EVENTS: "events"}.get(status)
    end = float(tnow[0])
    sis = SurvivalRecord(trial_index, seed, end, int(cnt[2]), censored_by is not None, horizon,
                         censored_by, final_states=sis_states)
    sirs_alive = t_sirs[0] < 0.0
    sirs = SurvivalRecord(trial_index, seed, end if sirs_alive else float(t_sirs[0]), int(cnt[3]),
                          sirs_alive, horizon, censored_by if sirs_alive else None,
                          final_states=sirs_states)
    return CoupledResult(sis, sirs, bool(cnt[4] == 0))


def harmonic_number(n: int) -> float:
    return math.fsum(1.0 / k for k in range(1, n + 1))
