"""Built-in verification suites behind ``sirslab verify``.

Each suite returns a list of named checks. The suites are small enough to
run in a minute or two in total; the test suite runs the same properties at
full scale.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import oracle, potentials, spectral
from .dynamics import (
    Configuration,
    Horizon,
    Mode,
    ProcessParams,
    harmonic_number,
    run_clock_engine,
    run_coupled_sis_sirs,
    run_direct_engine,
)
from .errors import InvalidParameterError, InvariantViolation
from .graphs import (
    Graph,
    gen_erdos_renyi,
    gen_random_regular,
    make_clique,
    make_cycle,
    make_path,
    make_star,
)

SUITES = ("potentials", "coupling", "oracles", "spectral", "engines")


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class VerifyReport:
    checks: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name: str, passed, detail: str = "") -> None:
        self.checks.append(Check(name, bool(passed), detail))

    def lines(self) -> list[str]:
        out = [f"{'PASS' if c.passed else 'FAIL'}  {c.name}" + (f"  ({c.detail})" if c.detail else "")
               for c in self.checks]
        out.append(f"{sum(c.passed for c in self.checks)}/{len(self.checks)} checks passed in {self.seconds:.1f}s")
        return out


def verify(suite: str = "all", seed: int = 0) -> VerifyReport:
    names = SUITES if suite == "all" else (suite,)
    for name in names:
        if name not in SUITES:
            raise InvalidParameterError(f"unknown suite {name!r}; choose from {', '.join(SUITES)} or all")
    report = VerifyReport()
    start = time.perf_counter()
    for name in names:
        _SUITE_FUNCS[name](report, seed)
    report.seconds = time.perf_counter() - start
    return report


# -- potentials ---------------------------------------------------------------


def _f_up(xs, x):
    return 1.0 - xs * np.log1p(1.0 / x)


def _f_down(xs, x):
    return -1.0 - xs * np.log1p(-1.0 / x)


def _f_step(xs, x, step):
    return step - xs * np.log1p(step / x)


def _f_vec(xs, x):
    r = x / xs
    return xs * (r - np.log(r) - 1.0)


def f_increment_violations(samples: int, rng: np.random.Generator, tol: float = 1e-12) -> int:
    """Count samples violating the one-step bounds on ``f(x*, x +- 1) - f(x*, x)`` for ``x > 2``."""
    xs = np.exp(rng.uniform(math.log(1e-2), math.log(1e4), samples))
    x = 2.0 + np.exp(rng.uniform(math.log(1e-6), math.log(1e5), samples))
    up, down = _f_up(xs, x), _f_down(xs, x)
    bad = up < 1.0 - xs / x - tol
    bad |= up > 1.0 - xs / x + xs / (x * (x + 1.0)) + tol
    bad |= up > 1.0 - xs / (x + 1.0) + tol
    bad |= down > -(1.0 - xs / x - xs / (x * (x - 1.0))) + tol
    return int(bad.sum())


def _random_contexts(samples: int, rng: np.random.Generator):
    n = np.round(np.exp(rng.uniform(math.log(200), math.log(1e6), samples)))
    c = rng.uniform(1.05, 6.0, samples)
    rho = np.exp(rng.uniform(math.log(0.05), math.log(5.0), samples))
    nprime = (1.0 + rho / c) * n
    istar = rho * (c - 1.0) * n / ((1.0 + rho) * c)
    return n, c, rho, nprime, istar


def step_bound_violations(samples: int, rng: np.random.Generator) -> int:
    """``|F(P+dP, I+dI) - F(P, I)| <= 2(1 + 2(1 + rho/c)/eps)`` for ``P, I >= eps n``."""
    n, c, rho, nprime, istar = _random_contexts(samples, rng)
    eps = rng.uniform(0.01, 0.3, samples)
    eps = np.maximum(eps, 4.0 / n)  # so that P - 1, I - 1 stay above eps n / 2
    I = rng.uniform(eps * n, n)
    S = rng.uniform(0.0, n - I)
    P = np.maximum(S + rho / c * n, eps * n)
    bound = 2.0 * (1.0 + 2.0 * (1.0 + rho / c) / eps)
    worst = np.zeros(samples)
    for dP in (-1.0, 0.0, 1.0):
        for dI in (-1.0, 0.0, 1.0):
            d = _f_step(nprime, P, dP) + _f_step(istar, I, dI)
            worst = np.maximum(worst, np.abs(d))
    return int(np.sum(worst > bound))


def large_infection_bound_violations(samples: int, rng: np.random.Generator) -> int:
    """``F(P, I) <= 2(n' + n' ln(n' / (min(eps, rho/c) n)))`` whenever ``I >= eps n``."""
    n, c, rho, nprime, istar = _random_contexts(samples, rng)
    eps = rng.uniform(0.001, 0.5, samples)
    I = rng.uniform(np.maximum(eps * n, 1.0), n)
    S = rng.uniform(0.0, n - I)
    P = S + rho / c * n
    F = _f_vec(nprime, P) + _f_vec(istar, I)
    bound = 2.0 * (nprime + nprime * np.log(nprime / (np.minimum(eps, rho / c) * n)))
    return int(np.sum(F > bound * (1.0 + 1e-12)))


def small_infection_bound_violations(samples: int, rng: np.random.Generator) -> int:
    """``F(P, I) >= I* (ln(1/eps) + ln(I*/n) - 1)`` whenever ``1 <= I <= eps n`` and ``eps < I*/n``."""
    n, c, rho, nprime, istar = _random_contexts(samples, rng)
    eps = (istar / n) * rng.uniform(0.01, 0.999, samples)
    eps = np.maximum(eps, 1.0 / n)
    keep = eps < istar / n
    I = rng.uniform(1.0, np.maximum(eps * n, 1.0))
    S = rng.uniform(0.0, n - I)
    P = S + rho / c * n
    F = _f_vec(nprime, P) + _f_vec(istar, I)
    bound = istar * (np.log(1.0 / eps) + np.log(istar / n) - 1.0)
    return int(np.sum(keep & (F < bound - 1e-9 * np.abs(bound))))


def h_drift_samples(G: Graph, c: float, rho: float, eps_H: float, eps_S: float, samples: int,
                    rng: np.random.Generator, r_o_factors=(0.5, 1.0, 2.0)):
    """Sample configurations with ``H > 0`` and ``S >= (1 - eps_S) n``.

    Returns ``(negative_count, decreased_count, min_drift)``: how often the
    H drift without outside infection is negative, and how often adding
    outside infection lowers it.
    """
    n = G.n
    d = G.degrees.mean()
    lam = c / d
    A = G.to_sparse()
    budget = int(math.floor(eps_S * n))
    negative = decreased = 0
    min_drift = math.inf
    for _ in range(samples):
        total = int(rng.integers(1, budget + 1))
        # H > 0 needs I > eps_H R
        R = int(rng.integers(0, total))
        I = total - R
        if I <= eps_H * R:
            I, R = total, 0
        st = potentials.random_placement(n, I, R, rng)
        inf = (st == 1).astype(float)
        sus = (st == 0).astype(float)
        e = float(np.rint(inf @ (A @ sus)))
        rates = potentials.RateVector.from_counts(lam, e, I, R, rho)
        base = potentials.drift_H(rates, eps_H)
        min_drift = min(min_drift, base)
        negative += base < 0
        for k in r_o_factors:
            if potentials.drift_H(rates.with_r_o(k * max(rates.r_si, 1.0)), eps_H) < base - 1e-15:
                decreased += 1
    return negative, decreased, min_drift


def f_drift_monotonicity_violations(G: Graph, c: float, rho: float, eps: float, samples: int,
                                    rng: np.random.Generator, factors=(0.0, 0.5, 1.0, 2.0)) -> int:
    """Count sampled configurations (``2 <= I <= eps n``) where the F drift increases with r_o."""
    n = G.n
    ctx = potentials.make_context(n, c, rho)
    lam = c / G.degrees.mean()
    A = G.to_sparse()
    top = max(2, int(math.floor(eps * n)))
    bad = 0
    for _ in range(samples):
        I = int(rng.integers(2, top + 1))
        R = int(rng.integers(0, n - I + 1))
        st = potentials.random_placement(n, I, R, rng)
        e = float(np.rint((st == 1).astype(float) @ (A @ (st == 0).astype(float))))
        S = n - I - R
        rates = potentials.RateVector.from_counts(lam, e, I, R, rho)
        prev = math.inf
        for k in factors:
            val = potentials.drift_F(ctx, potentials.p_of(ctx, S), I, rates.with_r_o(k * rates.r_si)).value
            if val > prev + 1e-12 * max(1.0, abs(prev)):
                bad += 1
                break
            prev = val
    return bad


def equilibrium_drift(n: int, c: float = 2.0, rho: float = 1.0) -> float:
    """F drift under mean-field rates at the integer point nearest the equilibrium."""
    ctx = potentials.make_context(n, c, rho)
    S, I = round(ctx.s_star), round(ctx.i_star)
    R = n - S - I
    return potentials.drift_F(ctx, potentials.p_of(ctx, S), I, potentials.mean_field_rates(ctx, S, I, R)).value


def _suite_potentials(report: VerifyReport, seed: int) -> None:
    rng = np.random.default_rng([seed, 1])
    k = f_increment_violations(100_000, rng)
    report.add("f increment bounds", k == 0, f"{k} violations / 100000")
    k = step_bound_violations(100_000, rng)
    report.add("F single-step bound", k == 0, f"{k} violations / 100000")
    k = large_infection_bound_violations(100_000, rng)
    report.add("F upper bound for large I", k == 0, f"{k} violations / 100000")
    k = small_infection_bound_violations(100_000, rng)
    report.add("F lower bound for small I", k == 0, f"{k} violations / 100000")
    G = gen_random_regular(500, 20, seed)
    neg, dec, low = h_drift_samples(G, 2.0, 1.0, 0.5, 0.02, 300, rng)
    report.add("H drift nonnegative near all-susceptible", neg == 0 and dec == 0,
               f"min drift {low:.4f}, {neg} negative, {dec} decreased by r_o")
    bad = f_drift_monotonicity_violations(G, 2.0, 1.0, 0.02, 300, rng)
    report.add("F drift non-increasing in r_o", bad == 0, f"{bad} violations / 300")
    D = equilibrium_drift(2000)
    report.add("F drift vanishes at mean-field equilibrium", abs(D) <= 1e-3, f"|D| = {abs(D):.2e} at n=2000")


# -- coupling -----------------------------------------------------------------


def _suite_coupling(report: VerifyReport, seed: int) -> None:
    G = gen_erdos_renyi(100, 0.06, seed)
    params = ProcessParams(0.5, 1.0)
    init = Configuration.single_infected(G, int(np.argmax(G.degrees)))
    held = ordered = 0
    trials = 100
    for t in range(trials):
        res = run_coupled_sis_sirs(G, params, init, seed * 1000 + t, Horizon(time=200.0))
        held += res.inclusion_held
        ordered += res.sirs.survival_time <= res.sis.survival_time
    report.add("SIRS infected set inside SIS infected set", held == trials, f"{held}/{trials} trials")
    report.add("SIRS survival <= SIS survival per trial", ordered == trials, f"{ordered}/{trials} trials")
    worst = -math.inf
    for G in (make_path(5), make_cycle(5), make_star(4), make_clique(5)):
        init = [1] + [0] * (G.n - 1)
        sirs = oracle.tiny_exact_expected_survival(G, 1.0, 1.0, init, Mode.SIRS).expected_T
        sis = oracle.tiny_exact_expected_survival(G, 1.0, 1.0, init, Mode.SIS).expected_T
        worst = max(worst, sirs - sis)
    report.add("exact E[T] SIRS <= SIS on tiny graphs", worst <= 1e-9, f"max(SIRS - SIS) = {worst:.3g}")


# -- oracles ------------------------------------------------------------------


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def _suite_oracles(report: VerifyReport, seed: int) -> None:
    lumped = oracle.star_exact_expected_survival(5, 1.0, 1.0, oracle.LumpedStarState(1, 5, 0)).expected_T
    brute = oracle.tiny_exact_expected_survival(make_star(5), 1.0, 1.0, [1, 0, 0, 0, 0, 0]).expected_T
    report.add("star lumping matches brute force", _rel(lumped, brute) <= 1e-8, f"{lumped:.10f} vs {brute:.10f}")
    lumped = oracle.clique_exact_expected_survival(4, 0.5, 1.0, oracle.LumpedCliqueState(1, 0)).expected_T
    brute = oracle.tiny_exact_expected_survival(make_clique(4), 0.5, 1.0, [1, 0, 0, 0]).expected_T
    report.add("clique lumping matches brute force", _rel(lumped, brute) <= 1e-8, f"{lumped:.10f} vs {brute:.10f}")
    empty = Graph.from_edges(4, np.empty((0, 2), dtype=np.int64))
    val = oracle.tiny_exact_expected_survival(empty, 1.0, 1.0, [1, 1, 1, 1]).expected_T
    report.add("isolated vertices give the harmonic number", abs(val - harmonic_number(4)) <= 1e-10,
               f"{val:.12f} vs H_4 = {harmonic_number(4):.12f}")
    n = 50
    worst = max(oracle.star_worst_start(n, lam, 1.0)[1].expected_T for lam in (0.5, 1.0, 2.0, 10.0))
    bound = (math.log(n) + 2.0) * (4 * n + 1)
    report.add("star survival below the logarithmic-times-linear ceiling", worst <= bound,
               f"n={n}: worst E[T] {worst:.2f} <= {bound:.1f}")


# -- spectral -----------------------------------------------------------------


def _suite_spectral(report: VerifyReport, seed: int) -> None:
    for k in (5, 20):
        delta = spectral.spectral_expansion(make_clique(k))
        report.add(f"delta(K_{k}) = 1/{k - 1}", abs(delta - 1.0 / (k - 1)) <= 1e-9, f"{delta:.12f}")
    delta = spectral.spectral_expansion(make_star(10))
    report.add("delta(star) = 1", abs(delta - 1.0) <= 1e-9, f"{delta:.12f}")
    for name, G, d in (("K_20", make_clique(20), 19), ("random 10-regular on 200", gen_random_regular(200, 10, seed), 10)):
        cert = spectral.certify_expander(G, d, 0.0)
        rep = spectral.check_edge_density_bounds(G, cert, 2000, seed)
        report.add(f"cut and edge-density bounds on {name}", rep.ok,
                   f"{rep.pairs_checked} pairs, {rep.cut_violations}+{rep.density_violations} violations")


# -- engines ------------------------------------------------------------------


def _mc_check(report: VerifyReport, name: str, runner, G: Graph, exact: float, trials: int, seed: int) -> None:
    params = ProcessParams(1.0, 1.0)
    init = Configuration.single_infected(G, 0)
    T = np.array([runner(G, params, init, seed * 100_003 + t).survival_time for t in range(trials)])
    se = T.std(ddof=1) / math.sqrt(trials)
    z = (T.mean() - exact) / se
    report.add(name, abs(z) <= 3.0, f"mean {T.mean():.4f} vs exact {exact:.4f}, z = {z:+.2f}")


def _suite_engines(report: VerifyReport, seed: int) -> None:
    G = make_star(10)
    exact = oracle.star_exact_expected_survival(10, 1.0, 1.0, oracle.LumpedStarState(1, 10, 0)).expected_T
    _mc_check(report, "direct engine mean matches star oracle", run_direct_engine, G, exact, 4000, seed)
    _mc_check(report, "clock engine mean matches star oracle", run_clock_engine, G, exact, 2000, seed + 1)
    G = gen_erdos_renyi(80, 0.08, seed)
    detail = "40 debug runs on ER(80, 0.08)"
    try:
        for t in range(20):
            for runner in (run_direct_engine, run_clock_engine):
                runner(G, ProcessParams(1.0, 1.0), Configuration.single_infected(G, 0), t,
                       Horizon(time=5.0), debug=True)
        ok = True
    except InvariantViolation as exc:
        ok, detail = False, str(exc)
    report.add("incremental counts agree with full recounts", ok, detail)


_SUITE_FUNCS = {
    "potentials": _suite_potentials,
    "coupling": _suite_coupling,
    "oracles": _suite_oracles,
    "spectral": _suite_spectral,
    "engines": _suite_engines,
}
