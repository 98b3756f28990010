"""Experiment harness: configuration, trial fan-out, censoring-aware
summaries, lambda sweeps and growth fits."""

from __future__ import annotations

import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from .dynamics import (
    Configuration,
    Horizon,
    Mode,
    ProcessParams,
    SurvivalRecord,
    run_clock_engine,
    run_direct_engine,
    run_projected,
)
from .errors import ConfigError, DomainError, FitError, InvalidParameterError
from .graphs import (
    Graph,
    HrgParams,
    gen_erdos_renyi,
    gen_hyperbolic,
    gen_random_regular,
    giant_component,
    make_clique,
    make_cycle,
    make_path,
    make_star,
    read_graph,
)

CSV_HEADER = "trial,seed,n,family,lambda,rho,mode,engine,T,steps,censored"
WORKERS_ENV = "SIRSLAB_WORKERS"
BOOTSTRAP_RESAMPLES = 1000
ENGINES = ("direct", "clock")

# required parameters per generator family
_FAMILY_FIELDS = {
    "star": ("n_leaves",),
    "clique": ("k",),
    "path": ("n",),
    "cycle": ("n",),
    "isolated": ("n",),
    "er": ("n", "p", "seed"),
    "regular": ("n", "d", "seed"),
    "hrg": ("n", "gamma", "avg_degree", "seed"),
    "file": ("path",),
}
_INIT_KINDS = ("center", "vertex", "all", "hub", "sets")


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        w = int(raw)
    except ValueError:
        raise InvalidParameterError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    if w < 1:
        raise InvalidParameterError(f"{WORKERS_ENV} must be positive, got {w}")
    return w


def trial_seed(master: int, lam_index: int, trial: int) -> int:
    """Stable 64-bit seed for one (lambda, trial) pair."""
    ss = np.random.SeedSequence([int(master), int(lam_index), int(trial)])
    return int(ss.generate_state(1, np.uint64)[0])


# -- configuration ------------------------------------------------------------


def _require(d: dict, key: str, path: str, kind=None):
    if key not in d:
        raise ConfigError(f"{path}.{key}" if path else key, "missing required field")
    val = d[key]
    if kind is not None and (not isinstance(val, kind) or isinstance(val, bool)):
        raise ConfigError(f"{path}.{key}" if path else key, f"expected {_kind_name(kind)}, got {val!r}")
    return val


def _kind_name(kind) -> str:
    if isinstance(kind, tuple):
        return " or ".join(k.__name__ for k in kind)
    return kind.__name__


@dataclass(frozen=True)
class ExperimentConfig:
    graph: dict
    lam: float
    rho: float = 1.0
    mode: str = "SIRS"
    init: dict | None = None  # default: vertex 0, or leaf 1 on a star
    trials: int = 100
    seed: int = 0
    horizon_time: float = 1e5
    horizon_events: int = 10**7
    engine: str = "direct"
    subgraph: tuple | None = None

    def __post_init__(self):
        g = self.graph
        if not isinstance(g, dict):
            raise ConfigError("graph", "expected an object")
        family = _require(g, "family", "graph", str)
        if family not in _FAMILY_FIELDS:
            raise ConfigError("graph.family", f"unknown family {family!r}")
        for key in _FAMILY_FIELDS[family]:
            kind = str if key == "path" else (int, float)
            val = _require(g, key, "graph", kind)
            if key in ("n", "n_leaves", "k", "d", "seed") and (int(val) != val or val < (0 if key == "seed" else 1)):
                raise ConfigError(f"graph.{key}", f"must be a {'nonnegative' if key == 'seed' else 'positive'} integer, got {val!r}")
        if family == "er" and not 0 <= g["p"] <= 1:
            raise ConfigError("graph.p", f"edge probability must lie in [0, 1], got {g['p']}")
        if family == "hrg" and not 2 < g["gamma"] < 3:
            raise ConfigError("graph.gamma", f"must lie in (2, 3), got {g['gamma']}")
        if isinstance(self.lam, bool) or not isinstance(self.lam, (int, float)) or not self.lam > 0:
            raise ConfigError("process.lambda", f"must be a positive number, got {self.lam!r}")
        if isinstance(self.rho, bool) or not isinstance(self.rho, (int, float)) or self.rho < 0:
            raise ConfigError("process.rho", f"must be a nonnegative number, got {self.rho!r}")
        if self.mode not in (m.value for m in Mode):
            raise ConfigError("process.mode", f"must be SIRS or SIS, got {self.mode!r}")
        if self.mode == "SIRS" and self.rho == 0:
            raise ConfigError("process.rho", "SIRS needs a positive deimmunization rate")
        if not isinstance(self.trials, int) or isinstance(self.trials, bool) or self.trials < 1:
            raise ConfigError("trials", f"must be a positive integer, got {self.trials!r}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ConfigError("seed", f"must be a nonnegative integer, got {self.seed!r}")
        if not isinstance(self.horizon_time, (int, float)) or not self.horizon_time > 0:
            raise ConfigError("horizon.time", f"must be positive, got {self.horizon_time!r}")
        if int(self.horizon_events) != self.horizon_events or self.horizon_events < 1:
            raise ConfigError("horizon.events", f"must be a positive integer, got {self.horizon_events!r}")
        if self.engine not in ENGINES:
            raise ConfigError("engine", f"must be one of {', '.join(ENGINES)}, got {self.engine!r}")
        if self.init is None:
            object.__setattr__(self, "init", {"kind": "vertex", "vertex": 1 if family == "star" else 0})
        _check_init_spec(self.init)
        if self.subgraph is not None:
            if len(self.subgraph) == 0 or not all(isinstance(v, int) and v >= 0 for v in self.subgraph):
                raise ConfigError("subgraph", "must be a nonempty list of vertex ids")

    @property
    def family(self) -> str:
        return self.graph["family"]

    @property
    def params(self) -> ProcessParams:
        return ProcessParams(float(self.lam), float(self.rho), Mode(self.mode))

    @property
    def horizon(self) -> Horizon:
        return Horizon(float(self.horizon_time), int(self.horizon_events))

    def with_lambda(self, lam: float) -> ExperimentConfig:
        return _replace(self, lam=lam)

    def to_dict(self) -> dict:
        out = {
            "graph": dict(self.graph),
            "process": {"lambda": self.lam, "rho": self.rho, "mode": self.mode},
            "init": dict(self.init),
            "trials": self.trials,
            "seed": self.seed,
            "horizon": {"time": self.horizon_time, "events": self.horizon_events},
            "engine": self.engine,
        }
        if self.subgraph is not None:
            out["subgraph"] = list(self.subgraph)
        return out

    @classmethod
    def from_dict(cls, d: dict, overrides: dict | None = None) -> ExperimentConfig:
        """Build from the JSON layout, applying flat ``overrides`` on top.

        Recognized override keys: lambda, rho, mode, trials, seed,
        horizon_time, horizon_events, engine, init, subgraph.
        """
        if not isinstance(d, dict):
            raise ConfigError("<root>", "expected a JSON object")
        known = {"graph", "process", "init", "trials", "seed", "horizon", "engine", "subgraph"}
        for key in d:
            if key not in known:
                raise ConfigError(key, "unknown field")
        graph = _require(d, "graph", "", dict)
        process = _require(d, "process", "", dict)
        horizon = d.get("horizon", {})
        if not isinstance(horizon, dict):
            raise ConfigError("horizon", "expected an object")
        kw: dict[str, Any] = {
            "graph": dict(graph),
            "lam": _require(process, "lambda", "process"),
            "rho": process.get("rho", 1.0),
            "mode": process.get("mode", "SIRS"),
            "init": dict(d["init"]) if isinstance(d.get("init"), dict) else d.get("init"),
            "trials": d.get("trials", 100),
            "seed": d.get("seed", 0),
            "horizon_time": horizon.get("time", 1e5),
            "horizon_events": horizon.get("events", 10**7),
            "engine": d.get("engine", "direct"),
            "subgraph": tuple(d["subgraph"]) if d.get("subgraph") is not None else None,
        }
        for key, val in (overrides or {}).items():
            if val is None:
                continue
            if key == "subgraph":
                val = tuple(val)
            kw["lam" if key == "lambda" else key] = val
        return cls(**kw)

    @classmethod
    def from_json(cls, path: str | os.PathLike, overrides: dict | None = None) -> ExperimentConfig:
        with open(path) as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError("<root>", f"invalid JSON: {exc}") from None
        return cls.from_dict(raw, overrides)


def _replace(cfg: ExperimentConfig, **changes) -> ExperimentConfig:
    kw = {name: getattr(cfg, name) for name in cfg.__dataclass_fields__}
    kw.update(changes)
    return ExperimentConfig(**kw)


def _check_init_spec(init: dict) -> None:
    if not isinstance(init, dict):
        raise ConfigError("init", "expected an object")
    kind = _require(init, "kind", "init", str)
    if kind not in _INIT_KINDS:
        raise ConfigError("init.kind", f"must be one of {', '.join(_INIT_KINDS)}, got {kind!r}")
    if kind == "vertex":
        v = _require(init, "vertex", "init", int)
        if v < 0:
            raise ConfigError("init.vertex", "must be nonnegative")
    if kind == "sets":
        inf = _require(init, "infected", "init", list)
        if not inf:
            raise ConfigError("init.infected", "at least one vertex must be infected")
        _require_list = init.get("recovered", [])
        if not isinstance(_require_list, list):
            raise ConfigError("init.recovered", "expected a list")


def build_graph(spec: dict) -> Graph:
    """Instantiate the graph described by a config ``graph`` object."""
    fam = spec["family"]
    if fam == "star":
        return make_star(int(spec["n_leaves"]))
    if fam == "clique":
        return make_clique(int(spec["k"]))
    if fam == "path":
        return make_path(int(spec["n"]))
    if fam == "cycle":
        return make_cycle(int(spec["n"]))
    if fam == "isolated":
        return Graph.from_edges(int(spec["n"]), np.empty((0, 2), dtype=np.int64))
    if fam == "er":
        return gen_erdos_renyi(int(spec["n"]), float(spec["p"]), int(spec["seed"]))
    if fam == "regular":
        return gen_random_regular(int(spec["n"]), int(spec["d"]), int(spec["seed"]))
    if fam == "hrg":
        params = HrgParams(int(spec["n"]), float(spec["gamma"]), float(spec["avg_degree"]))
        return gen_hyperbolic(params, int(spec["seed"])).graph
    if fam == "file":
        return read_graph(spec["path"])
    raise ConfigError("graph.family", f"unknown family {fam!r}")


def resolve_init(G: Graph, spec: dict) -> Configuration:
    kind = spec["kind"]
    try:
        if kind == "center":
            return Configuration.single_infected(G, 0)
        if kind == "vertex":
            return Configuration.single_infected(G, int(spec["vertex"]))
        if kind == "all":
            return Configuration(G, np.ones(G.n, dtype=np.int8))
        if kind == "hub":
            comp = giant_component(G)
            return Configuration.single_infected(G, int(comp[np.argmax(G.degrees[comp])]))
        return Configuration.from_sets(G, spec["infected"], spec.get("recovered", []))
    except InvalidParameterError as exc:
        raise ConfigError("init", str(exc)) from None


# -- statistics ---------------------------------------------------------------


@dataclass(frozen=True)
class SummaryStats:
    """Censoring-aware summary of survival times.

    Censored trials enter the order statistics as ``+inf``: a quantile whose
    interpolation touches a censored value is reported as ``inf`` (rendered
    "> horizon"). ``mean`` averages the observed times of all trials; when
    any trial is censored it is only a lower bound and ``se`` is ``None``.
    """

    trials: int
    censored: int
    mean: float
    se: float | None
    mean_is_lower_bound: bool
    quantiles: dict
    median_ci: tuple
    horizon_time: float | None = None

    @property
    def median(self) -> float:
        return self.quantiles[0.5]

    @property
    def surviving_fraction(self) -> float:
        return self.censored / self.trials

    def median_display(self) -> str:
        return "> horizon" if math.isinf(self.median) else f"{self.median:.6g}"

    def to_dict(self) -> dict:
        def num(x):
            return None if x is None else ("> horizon" if math.isinf(x) else x)

        return {
            "trials": self.trials,
            "censored": self.censored,
            "surviving_fraction": self.surviving_fraction,
            "mean": self.mean,
            "mean_is_lower_bound": self.mean_is_lower_bound,
            "se": self.se,
            "median": num(self.median),
            "quantiles": {str(q): num(v) for q, v in self.quantiles.items()},
            "median_ci": [num(v) for v in self.median_ci],
            "horizon_time": self.horizon_time,
            "note": "censored trials present: mean is a lower bound; use median and surviving fraction"
            if self.censored else None,
        }


def _censored_quantile(sorted_vals: np.ndarray, q: float) -> float:
    pos = q * (len(sorted_vals) - 1)
    lo, hi = math.floor(pos), math.ceil(pos)
    if math.isinf(sorted_vals[hi]):
        return math.inf
    return float(sorted_vals[lo] + (pos - lo) * (sorted_vals[hi] - sorted_vals[lo]))


def _bootstrap_median_ci(vals: np.ndarray, resamples: int, seed: int, level: float = 0.95) -> tuple:
    n = len(vals)
    rng = np.random.default_rng(seed)
    chunk = max(1, min(resamples, 2_000_000 // n))
    meds = []
    done = 0
    while done < resamples:
        k = min(chunk, resamples - done)
        sample = vals[rng.integers(0, n, size=(k, n))]
        sample.sort(axis=1)
        meds.extend(_censored_quantile(row, 0.5) for row in sample)
        done += k
    meds = np.sort(np.array(meds))
    a = (1.0 - level) / 2.0
    return _censored_quantile(meds, a), _censored_quantile(meds, 1.0 - a)


def summarize(records: Sequence[SurvivalRecord], *, bootstrap_seed: int = 0,
              resamples: int = BOOTSTRAP_RESAMPLES) -> SummaryStats:
    if len(records) == 0:
        raise InvalidParameterError("cannot summarize an empty record list")
    times = np.array([r.survival_time for r in records], dtype=float)
    cens = np.array([r.censored for r in records], dtype=bool)
    n = len(times)
    k = int(cens.sum())
    mean = float(times.mean())
    se = None
    if k == 0:
        se = float(times.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    keyed = np.sort(np.where(cens, np.inf, times))
    quantiles = {q: _censored_quantile(keyed, q) for q in (0.1, 0.5, 0.9)}
    ci = _bootstrap_median_ci(keyed, resamples, bootstrap_seed) if resamples > 0 else (math.nan, math.nan)
    horizon = records[0].horizon.time if records[0].horizon is not None else None
    return SummaryStats(n, k, mean, se, k > 0, quantiles, ci, horizon)


# -- running ------------------------------------------------------------------


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    graph: Graph
    records: list
    summary: SummaryStats
    lam_index: int = 0

    def csv_rows(self) -> list[str]:
        cfg = self.config
        rows = []
        for r in self.records:
            rows.append(",".join([
                str(r.trial_index), str(r.seed), str(self.graph.n), cfg.family, repr(float(cfg.lam)),
                repr(float(cfg.rho)), cfg.mode, cfg.engine, repr(float(r.survival_time)), str(r.steps),
                str(int(r.censored)),
            ]))
        return rows

    def to_csv(self) -> str:
        return format_csv(self.config, self.csv_rows())


def format_csv(config: ExperimentConfig, rows: Iterable[str], extra: dict | None = None) -> str:
    buf = io.StringIO()
    meta = config.to_dict()
    if extra:
        meta.update(extra)
    buf.write("# config: " + json.dumps(meta, sort_keys=True) + "\n")
    buf.write(CSV_HEADER + "\n")
    for row in rows:
        buf.write(row + "\n")
    return buf.getvalue()


def _run_trials(G: Graph, cfg: ExperimentConfig, init: Configuration, lam_index: int,
                trials: Sequence[int]) -> list[SurvivalRecord]:
    params, horizon = cfg.params, cfg.horizon
    out = []
    for t in trials:
        seed = trial_seed(cfg.seed, lam_index, t)
        if cfg.subgraph is not None:
            rec = run_projected(G, cfg.subgraph, params, init, seed, horizon, engine=cfg.engine, trial_index=t)
        elif cfg.engine == "clock":
            rec = run_clock_engine(G, params, init, seed, horizon, trial_index=t)
        else:
            rec = run_direct_engine(G, params, init, seed, horizon, trial_index=t)
        rec.final_states = None
        out.append(rec)
    return out


def run_experiment(config: ExperimentConfig, graph: Graph | None = None, *, lam_index: int = 0,
                   workers: int | None = None, bootstrap_seed: int | None = None) -> ExperimentResult:
    """Run ``config.trials`` independent trials.

    Trial ``t`` uses the seed ``trial_seed(config.seed, lam_index, t)``, so
    the output does not depend on ``workers``.
    """
    G = build_graph(config.graph) if graph is None else graph
    if config.subgraph is not None and max(config.subgraph) >= G.n:
        raise ConfigError("subgraph", "vertex id out of range")
    init = resolve_init(G, config.init)
    workers = default_workers() if workers is None else workers
    trials = list(range(config.trials))
    if workers <= 1 or config.trials < 2 * workers:
        records = _run_trials(G, config, init, lam_index, trials)
    else:
        chunks = [trials[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(_run_trials, [G] * workers, [config] * workers, [init] * workers,
                             [lam_index] * workers, chunks)
            records = sorted((r for part in parts for r in part), key=lambda r: r.trial_index)
    # the bootstrap stream sits past every trial index
    seed = trial_seed(config.seed, lam_index, 2**32) if bootstrap_seed is None else bootstrap_seed
    return ExperimentResult(config, G, records, summarize(records, bootstrap_seed=seed), lam_index)


@dataclass
class SweepResult:
    config: ExperimentConfig
    graph: Graph
    results: list  # ExperimentResult per lambda, increasing lambda

    def table(self) -> list[tuple[float, SummaryStats]]:
        return [(r.config.lam, r.summary) for r in self.results]

    def to_csv(self) -> str:
        rows = [row for r in self.results for row in r.csv_rows()]
        return format_csv(self.config, rows, {"lambdas": [r.config.lam for r in self.results]})

    def summary_csv(self) -> str:
        lines = ["lambda,trials,censored,surviving_fraction,mean,mean_is_lower_bound,q10,median,q90"]
        for lam, s in self.table():
            q = s.quantiles
            lines.append(",".join([
                repr(float(lam)), str(s.trials), str(s.censored), repr(s.surviving_fraction), repr(s.mean),
                str(int(s.mean_is_lower_bound)), repr(q[0.1]), repr(q[0.5]), repr(q[0.9]),
            ]))
        return "\n".join(lines) + "\n"


def sweep_lambda(config: ExperimentConfig, lambdas: Sequence[float], graph: Graph | None = None, *,
                 workers: int | None = None) -> SweepResult:
    """One experiment per lambda on a single shared graph instance."""
    lams = [float(x) for x in lambdas]
    if not lams:
        raise InvalidParameterError("lambda list must be nonempty")
    if any(b <= a for a, b in zip(lams, lams[1:])):
        raise InvalidParameterError("lambda list must be strictly increasing")
    G = build_graph(config.graph) if graph is None else graph
    results = [run_experiment(config.with_lambda(lam), G, lam_index=i, workers=workers)
               for i, lam in enumerate(lams)]
    return SweepResult(config, G, results)


# -- growth fits --------------------------------------------------------------


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r2: float
    r2_defined: bool
    model: str


GROWTH_MODELS = ("log_linear_in_n", "linear_in_log_n", "star_poly")


def fit_growth(points: Iterable[tuple[float, float]], model: str, rho: float = 1.0) -> FitResult:
    """Least squares in transformed coordinates.

    ``log_linear_in_n``: ln(value) against n. ``linear_in_log_n``: value
    against ln n. ``star_poly``: value against n^rho ln n.
    """
    pts = [(float(a), float(b)) for a, b in points]
    if model not in GROWTH_MODELS:
        raise InvalidParameterError(f"unknown growth model {model!r}")
    if len(pts) < 3:
        raise FitError(f"need at least 3 points, got {len(pts)}")
    n = np.array([p[0] for p in pts])
    v = np.array([p[1] for p in pts])
    if len(np.unique(n)) != len(n):
        raise FitError("abscissae must be distinct")
    if model == "log_linear_in_n":
        if np.any(v <= 0):
            raise DomainError("log_linear_in_n needs positive values")
        x, y = n, np.log(v)
    else:
        if np.any(n <= 0):
            raise DomainError(f"{model} needs positive n")
        x = np.log(n) if model == "linear_in_log_n" else n**rho * np.log(n)
        y = v
    if np.ptp(x) == 0:
        raise FitError("transformed abscissae are degenerate")
    slope, intercept = np.polyfit(x, y, 1)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot <= len(y) * (1e-12 * max(1.0, float(np.max(np.abs(y))))) ** 2:
        return FitResult(0.0, float(y.mean()), math.nan, False, model)
    ss_res = float(np.sum((y - (slope * x + intercept)) ** 2))
    return FitResult(float(slope), float(intercept), 1.0 - ss_res / ss_tot, True, model)


from .verification import verify  # noqa: E402  (re-exported as part of the harness API)
