import json
import math

import numpy as np
import pytest

from sirslab.dynamics import Horizon, SurvivalRecord
from sirslab.errors import ConfigError, FitError, InvalidParameterError
from sirslab.lab import (
    CSV_HEADER,
    ExperimentConfig,
    build_graph,
    fit_growth,
    resolve_init,
    run_experiment,
    summarize,
    sweep_lambda,
    trial_seed,
    verify,
)


def star_cfg(**kw):
    base = {"graph": {"family": "star", "n_leaves": 6}, "process": {"lambda": 1.0, "rho": 1.0}, "trials": 10}
    base.update(kw)
    return ExperimentConfig.from_dict(base)


def records(times, censored=None, horizon=100.0):
    censored = censored or [False] * len(times)
    return [SurvivalRecord(i, i, float(t), 1, c, Horizon(time=horizon)) for i, (t, c) in enumerate(zip(times, censored))]


class TestConfig:
    def test_defaults(self):
        cfg = star_cfg()
        assert cfg.mode == "SIRS" and cfg.engine == "direct"
        assert cfg.init == {"kind": "vertex", "vertex": 1}
        assert ExperimentConfig({"family": "clique", "k": 4}, 1.0).init["vertex"] == 0

    def test_round_trip(self):
        cfg = star_cfg(seed=5, horizon={"time": 50.0, "events": 1000})
        again = ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
        assert again == cfg

    def test_overrides(self):
        cfg = ExperimentConfig.from_dict(star_cfg().to_dict(), {"lambda": 2.5, "trials": 3, "rho": None})
        assert cfg.lam == 2.5 and cfg.trials == 3 and cfg.rho == 1.0

    @pytest.mark.parametrize("mutate,path", [
        (lambda d: d["graph"].update(p=1.5, family="er", n=10, seed=0), "graph.p"),
        (lambda d: d["graph"].pop("n_leaves"), "graph.n_leaves"),
        (lambda d: d["graph"].update(family="moebius"), "graph.family"),
        (lambda d: d["process"].update({"lambda": -1.0}), "process.lambda"),
        (lambda d: d["process"].update(mode="SEIR"), "process.mode"),
        (lambda d: d["process"].update(rho=0.0), "process.rho"),
        (lambda d: d.update(trials=0), "trials"),
        (lambda d: d.update(horizon={"time": -1.0}), "horizon.time"),
        (lambda d: d.update(engine="tau-leap"), "engine"),
        (lambda d: d.update(init={"kind": "sets", "infected": []}), "init.infected"),
        (lambda d: d.update(bogus=1), "bogus"),
    ])
    def test_errors_name_the_field(self, mutate, path):
        d = star_cfg().to_dict()
        mutate(d)
        with pytest.raises(ConfigError) as info:
            ExperimentConfig.from_dict(d)
        assert info.value.path == path

    def test_sis_allows_zero_rho(self):
        d = star_cfg().to_dict()
        d["process"].update(mode="SIS", rho=0.0)
        assert ExperimentConfig.from_dict(d).params.sis

    def test_bad_init_vertex(self):
        cfg = star_cfg(init={"kind": "vertex", "vertex": 99})
        with pytest.raises(ConfigError):
            resolve_init(build_graph(cfg.graph), cfg.init)

    def test_from_json_errors(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text("{nope")
        with pytest.raises(ConfigError):
            ExperimentConfig.from_json(p)


class TestInit:
    def test_hub_is_max_degree(self):
        cfg = ExperimentConfig({"family": "er", "n": 200, "p": 0.03, "seed": 2}, 1.0, init={"kind": "hub"})
        G = build_graph(cfg.graph)
        init = resolve_init(G, cfg.init)
        v = int(np.flatnonzero(init.states == 1)[0])
        assert G.degrees[v] == G.degrees.max()

    def test_sets(self):
        G = build_graph({"family": "path", "n": 5})
        c = resolve_init(G, {"kind": "sets", "infected": [0, 4], "recovered": [2]})
        assert (c.S, c.I, c.R) == (2, 2, 1)


class TestRun:
    def test_row_count_and_header(self):
        res = run_experiment(star_cfg())
        lines = res.to_csv().splitlines()
        assert lines[0].startswith("# config: ") and lines[1] == CSV_HEADER
        assert len(lines) == 12 and len(res.records) == 10

    def test_byte_identical(self):
        assert run_experiment(star_cfg(trials=30)).to_csv() == run_experiment(star_cfg(trials=30)).to_csv()

    def test_workers_do_not_change_output(self):
        cfg = star_cfg(trials=24)
        assert run_experiment(cfg, workers=1).to_csv() == run_experiment(cfg, workers=2).to_csv()

    def test_seeds_are_distinct(self):
        seeds = {trial_seed(0, i, t) for i in range(5) for t in range(200)}
        assert len(seeds) == 1000

    def test_censoring_reported(self):
        res = run_experiment(ExperimentConfig({"family": "clique", "k": 30}, 1.0, trials=5,
                                              horizon_time=2.0))
        assert res.summary.censored == 5 and res.summary.median_display() == "> horizon"
        assert all(row.endswith(",1") for row in res.csv_rows())

    def test_subgraph(self):
        cfg = star_cfg(subgraph=[0, 1, 2], trials=20)
        full = run_experiment(star_cfg(trials=20))
        sub = run_experiment(cfg)
        assert all(a.survival_time <= b.survival_time for a, b in zip(sub.records, full.records))

    def test_subgraph_out_of_range(self):
        with pytest.raises(ConfigError):
            run_experiment(star_cfg(subgraph=[50]))


class TestSummary:
    def test_all_censored(self):
        s = summarize(records([10.0] * 4, [True] * 4, horizon=10.0))
        assert s.censored == 4 and s.surviving_fraction == 1.0
        assert math.isinf(s.median) and s.se is None and s.mean_is_lower_bound
        assert s.to_dict()["median"] == "> horizon"

    def test_single_trial(self):
        s = summarize(records([3.0]))
        assert s.mean == 3.0 and s.se == 0.0 and s.median == 3.0

    def test_small_sample(self):
        s = summarize(records([1, 2, 3, 4, 5]))
        assert s.mean == 3.0 and s.median == 3.0
        assert s.se == pytest.approx(math.sqrt(2.5 / 5))
        lo, hi = s.median_ci
        assert 1 <= lo <= 3 <= hi <= 5

    def test_partial_censoring(self):
        s = summarize(records([1, 2, 3, 100, 100], [False, False, False, True, True]))
        assert s.median == 3.0 and math.isinf(s.quantiles[0.9])
        assert s.se is None and s.mean == pytest.approx(41.2)

    def test_empty(self):
        with pytest.raises(InvalidParameterError):
            summarize([])


class TestSweep:
    def test_ordering_and_shared_graph(self):
        cfg = ExperimentConfig({"family": "er", "n": 40, "p": 0.1, "seed": 1}, 1.0, trials=5)
        sw = sweep_lambda(cfg, [0.5, 1.0, 2.0])
        assert [lam for lam, _ in sw.table()] == [0.5, 1.0, 2.0]
        assert all(r.graph is sw.graph for r in sw.results)
        assert len(sw.summary_csv().splitlines()) == 4
        assert len(sw.to_csv().splitlines()) == 2 + 15

    @pytest.mark.parametrize("lams", [[], [1.0, 1.0], [2.0, 1.0]])
    def test_bad_lambda_lists(self, lams):
        with pytest.raises(InvalidParameterError):
            sweep_lambda(star_cfg(), lams)


class TestFit:
    def test_exponential(self):
        f = fit_growth([(n, 2.0**n) for n in range(5, 10)], "log_linear_in_n")
        assert f.slope == pytest.approx(math.log(2)) and f.r2 == pytest.approx(1.0)

    def test_logarithmic(self):
        f = fit_growth([(n, 3 * math.log(n) + 1) for n in (10, 100, 1000)], "linear_in_log_n")
        assert f.slope == pytest.approx(3.0) and f.intercept == pytest.approx(1.0)

    def test_star_poly(self):
        f = fit_growth([(n, 2 * n * math.log(n)) for n in (10, 20, 40)], "star_poly", rho=1.0)
        assert f.slope == pytest.approx(2.0)

    def test_constant(self):
        f = fit_growth([(1, 5.0), (2, 5.0), (3, 5.0)], "log_linear_in_n")
        assert f.slope == 0.0 and not f.r2_defined and math.isnan(f.r2)

    def test_too_few_points(self):
        with pytest.raises(FitError):
            fit_growth([(1, 1.0), (2, 2.0)], "log_linear_in_n")

    def test_duplicate_n(self):
        with pytest.raises(FitError):
            fit_growth([(1, 1.0), (1, 2.0), (3, 4.0)], "log_linear_in_n")

    def test_unknown_model(self):
        with pytest.raises(InvalidParameterError):
            fit_growth([(1, 1.0), (2, 2.0), (3, 4.0)], "cubic")


def test_verify_all_passes():
    report = verify("all")
    assert report.ok, "\n".join(report.lines())


def test_verify_unknown_suite():
    with pytest.raises(InvalidParameterError):
        verify("everything")
