"""Verification batteries: simulation runs compared against analytic optima,
published orderings and engine invariants.

Each suite returns a :class:`SuiteResult` holding one :class:`Check` per
criterion plus the logs it produced, so callers can apply the invariant and
stability checks to every run without re-simulating.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .harness import MetricsLog, equivalence_traces, hop_profile, linear_fit, littles_law, run, trend_slope
from .network import NO_INTERFERENCE, NODE_EXCLUSIVE, Link, Network, is_valid_schedule
from .oracle import backlog_scaling_fit, linear_optimum_log
from .scheduling import brute_force_max_weight, max_weight_schedule
from .scenario_io import apply_override, builtin_dict, scenario_from_dict
from .topologies import undirected_allocation


@dataclass
class Check:
    name: str
    passed: bool
    measured: str
    target: str
    # set when the criterion is known to be out of reach at this run length
    known_gap: bool = False


@dataclass
class SuiteResult:
    name: str
    checks: list = field(default_factory=list)
    logs: dict = field(default_factory=dict)
    seconds: float = 0.0

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def add(self, name, passed, measured, target, known_gap=False):
        self.checks.append(Check(name, bool(passed), measured, target, known_gap))


def format_table(checks):
    rows = [("result", "check", "measured", "target")]
    for c in checks:
        tag = "PASS" if c.passed else ("FAIL*" if c.known_gap else "FAIL")
        rows.append((tag, c.name, c.measured, c.target))
    widths = [max(len(r[i]) for r in rows) for i in range(3)]
    lines = ["  ".join(r[i].ljust(widths[i]) for i in range(3)) + "  " + r[3] for r in rows]
    if any(c.known_gap and not c.passed for c in checks):
        lines.append("FAIL* = documented gap, see README")
    return "\n".join(lines)


def builtin_scenario(name, **overrides):
    doc = builtin_dict(name)
    for k, v in overrides.items():
        apply_override(doc, k, v)
    return scenario_from_dict(doc)


def _timed_run(scenario):
    t0 = time.perf_counter()
    log = run(scenario)
    return log, time.perf_counter() - t0


def _rel(a, b):
    return abs(a - b) / abs(b)


# -- criterion batteries --------------------------------------------------------

def oracle_suite(slots=500_000, seed=1, budget=60.0) -> SuiteResult:
    """Elastic five-link chain against the log-utility optimum."""
    res = SuiteResult("oracle")
    spec = builtin_scenario("chain5", slots=slots, seed=seed)
    sc = spec.scenario
    log, secs = _timed_run(sc)
    res.logs["chain5"] = log
    res.seconds = secs
    N = sc.network.num_links
    c = sc.network.links[0].capacity
    opt = linear_optimum_log(N, c)
    prof = hop_profile(log, 0)
    # mean per-hop drop of flow 0's counters; the destination holds zero
    diff = prof[0] / N / sc.M
    x0 = log.mean_rate[0]
    res.add("per-hop differential Q/M", _rel(diff, opt.q_diff_star) <= 0.2,
            f"{diff:.4f}", f"{opt.q_diff_star:.4f} +-20%")
    res.add("long-flow rate x0", _rel(x0, opt.x0_star) <= 0.1,
            f"{x0:.4f}", f"{opt.x0_star:.4f} +-10%")
    backlog, little = littles_law(log)
    res.add("Little's law", backlog > 0 and _rel(little, backlog) <= 0.05,
            f"{backlog:.1f} vs {little:.1f}", "within 5%")
    res.add("runtime", secs < budget, f"{secs:.0f}s", f"< {budget:.0f}s")
    return res


def profile_suite(slots=200_000, seed=1, budget=120.0) -> SuiteResult:
    """Forty-link inelastic chain: linear flow-0 profile and a small real
    backlog under 1% thinning."""
    res = SuiteResult("profile")
    sc = builtin_scenario("linear40", slots=slots, seed=seed).scenario
    log, secs = _timed_run(sc)
    res.logs["linear40"] = log
    res.seconds = secs
    # destination side first so that growth toward the source is a positive slope
    slope, r2 = linear_fit(hop_profile(log, 0)[::-1])
    res.add("flow-0 profile slope", slope > 0, f"{slope:.3f}", "> 0")
    # the upstream hops are still filling at this horizon; see README
    res.add("flow-0 profile R^2", r2 > 0.9, f"{r2:.3f}", "> 0.9", known_gap=True)
    ratio = log.mean_real_total() / log.mean_shadow_total()
    res.add("real/shadow backlog", ratio < 0.25,
            f"{log.mean_real_total():.0f}/{log.mean_shadow_total():.0f} = {ratio:.3f}", "< 0.25")
    res.add("runtime", secs < budget, f"{secs:.0f}s", f"< {budget:.0f}s")
    return res


def grid_suite(slots=500_000, betas=(0.95, 0.97, 0.99), seed=1, budget=600.0) -> SuiteResult:
    """Lattice with 48 elastic flows: real totals ordered by beta and far
    below the shadow total."""
    res = SuiteResult("grid")
    real = {}
    shadow = []
    for beta in betas:
        sc = builtin_scenario("grid16", slots=slots, seed=seed, beta=beta).scenario
        log, secs = _timed_run(sc)
        res.logs[f"grid16[beta={beta}]"] = log
        res.seconds += secs
        real[beta] = log.mean_real_total()
        shadow.append(log.mean_shadow_total())
    sh = float(np.mean(shadow))
    chain = [real[b] for b in sorted(betas)] + [sh]
    ordered = all(a < b for a, b in zip(chain, chain[1:]))
    res.add("real(beta) increasing, below shadow", ordered,
            " < ".join(f"{v:.0f}" for v in chain), "strict order")
    top = real[max(betas)] / sh
    res.add(f"real({max(betas)})/shadow", top < 0.1, f"{top:.3f}", "< 0.1", known_gap=True)
    res.add("runtime", res.seconds < budget, f"{res.seconds:.0f}s", f"< {budget:.0f}s")
    return res


def diamond_suite(slots=1_000_000, seed=1, budget=180.0) -> SuiteResult:
    """Eight-node network: M=10 confines each flow to its one-hop edge,
    M=0 spreads traffic over the graph."""
    res = SuiteResult("diamond")
    sc = builtin_scenario("diamond8", slots=slots, seed=seed, M=10).scenario
    log, secs = _timed_run(sc)
    res.logs["diamond8[M=10]"] = log
    res.seconds += secs
    alloc = undirected_allocation(sc.network, log.allocation())
    for f in sc.flows:
        edge = (min(f.source, f.destination), max(f.source, f.destination))
        d = f.destination
        direct = alloc.get((edge, d), 0.0)
        res.add(f"flow {f.id} rate on {edge}", 4.8 <= direct <= 5.2, f"{direct:.3f}", "[4.8, 5.2]")
        others = max([v for (e, k), v in alloc.items() if k == d and e != edge], default=0.0)
        res.add(f"flow {f.id} largest other rate", others < 0.05, f"{others:.4f}", "< 0.05")
    sc0 = replace(sc, M=0.0)
    log0, secs0 = _timed_run(sc0)
    res.logs["diamond8[M=0]"] = log0
    res.seconds += secs0
    alloc0 = undirected_allocation(sc.network, log0.allocation())
    used = {e for (e, k), v in alloc0.items() if v > 0.1}
    res.add("M=0 edges with rate > 0.1", len(used) >= 8, f"{len(used)} of {len(set(e for e, _ in alloc0))}",
            ">= 8")
    res.add("runtime", res.seconds < budget, f"{res.seconds:.0f}s", f"< {budget:.0f}s")
    return res


def tradeoff_suite(lams=(5, 6, 7, 8, 9), slots=200_000, seed=1, budget=600.0) -> SuiteResult:
    """Backlog against arrival rate for M in {0, 10}, plus M=20 at the
    lowest rate."""
    res = SuiteResult("tradeoff")
    backlog = {}
    for lam in lams:
        for M in (0, 10):
            sc = builtin_scenario("diamond8", slots=slots, seed=seed, M=M, **{"lambda": lam}).scenario
            log, secs = _timed_run(sc)
            res.logs[f"diamond8[lambda={lam},M={M}]"] = log
            res.seconds += secs
            backlog[(lam, M)] = log.mean_real_total()
        res.add(f"lambda={lam}: backlog M=10 < M=0", backlog[(lam, 10)] < backlog[(lam, 0)],
                f"{backlog[(lam, 10)]:.1f} < {backlog[(lam, 0)]:.1f}", "strict")
    lam = min(lams)
    sc = builtin_scenario("diamond8", slots=slots, seed=seed, M=20, **{"lambda": lam}).scenario
    log, secs = _timed_run(sc)
    res.logs[f"diamond8[lambda={lam},M=20]"] = log
    res.seconds += secs
    b20 = log.mean_real_total()
    res.add(f"lambda={lam}: backlog M=20 > M=10", b20 > backlog[(lam, 10)],
            f"{b20:.1f} > {backlog[(lam, 10)]:.1f}", "strict")
    res.add("runtime", res.seconds < budget, f"{res.seconds:.0f}s", f"< {budget:.0f}s")
    return res


def scaling_suite(sizes=(5, 10, 20, 40), slots=1_000_000, seed=1, budget=300.0) -> SuiteResult:
    """Traditional back-pressure on chains at 75% load: flow-0 backlog grows
    roughly as the square of the route length."""
    res = SuiteResult("scaling")
    points = []
    for N in sizes:
        sc = builtin_scenario("linear40", N=N, engine="traditional", beta=1.0,
                              slots=slots, seed=seed).scenario
        log, secs = _timed_run(sc)
        res.logs[f"traditional[N={N}]"] = log
        res.seconds += secs
        points.append((N, sum(v for (_, k), v in log.avg_queue.items() if k == 0)))
    fit = backlog_scaling_fit(points)
    res.add("backlog exponent", 1.6 <= fit.exponent <= 2.4,
            f"{fit.exponent:.2f} [{fit.low:.2f}, {fit.high:.2f}] R^2={fit.r_squared:.3f}", "[1.6, 2.4]")
    res.add("runtime", res.seconds < budget, f"{res.seconds:.0f}s", f"< {budget:.0f}s")
    return res


def random_schedule_instance(rng, max_links=20):
    """Random small network and weight vector with frequent ties, ``None``
    entries and fractional weights."""
    n = int(rng.integers(2, 9))
    pairs = [(u, v) for u in range(n) for v in range(n) if u != v]
    k = int(rng.integers(1, min(max_links, len(pairs)) + 1))
    chosen = rng.choice(len(pairs), size=k, replace=False)
    links = tuple(Link(*pairs[i], int(rng.integers(1, 11))) for i in sorted(chosen))
    model = NODE_EXCLUSIVE if rng.random() < 0.8 else NO_INTERFERENCE
    weights = []
    for _ in links:
        r = rng.random()
        if r < 0.1:
            weights.append(None)
        elif r < 0.2:
            weights.append(Fraction(int(rng.integers(-20, 40)), int(rng.integers(1, 7))))
        else:
            # small integer range so equal-objective ties are common
            weights.append(int(rng.integers(-3, 6)))
    return Network(n, links, model), weights


def solver_suite(instances=200, seed=20240601) -> SuiteResult:
    """Max-weight solver against exhaustive search on random instances of
    at most 20 links."""
    res = SuiteResult("solver")
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    bad_obj = bad_set = invalid = 0
    for _ in range(instances):
        net, w = random_schedule_instance(rng)
        fast, slow = max_weight_schedule(net, w), brute_force_max_weight(net, w)
        bad_obj += fast.objective(w) != slow.objective(w)
        bad_set += fast.active != slow.active
        invalid += not is_valid_schedule(net, fast)
    res.add("objective equals brute force", bad_obj == 0, f"{bad_obj} mismatches", f"0 of {instances}")
    res.add("same active set (tie-break)", bad_set == 0, f"{bad_set} mismatches", f"0 of {instances}")
    res.add("valid schedules", invalid == 0, f"{invalid} invalid", f"0 of {instances}")
    res.seconds = time.perf_counter() - t0
    return res


def equivalence_suite(slots=1000, seed=1) -> SuiteResult:
    """Shadow counters equal traditional back-pressure queues fed the same
    arrivals, slot by slot."""
    res = SuiteResult("equivalence")
    cases = {
        "chain": builtin_scenario("linear40", N=10, slots=slots, seed=seed).scenario,
        "grid": builtin_scenario("grid16", slots=slots, seed=seed).scenario,
    }
    t0 = time.perf_counter()
    for name, sc in cases.items():
        a, b = equivalence_traces(sc)
        first = next((t for t, (x, y) in enumerate(zip(a, b)) if x != y), None)
        res.add(f"{name} traces identical", first is None and len(a) == len(b) == slots,
                "identical" if first is None else f"differ at slot {first}", f"{slots} slots")
    res.seconds = time.perf_counter() - t0
    return res


def determinism_suite(seed=7) -> SuiteResult:
    """Repeated runs of each engine give bit-identical logs."""
    res = SuiteResult("determinism")
    cases = {
        "shadow chain": builtin_scenario("linear40", slots=20_000, seed=seed).scenario,
        "shadow grid": builtin_scenario("grid16", slots=5_000, seed=seed).scenario,
        "min-resource": builtin_scenario("diamond8", slots=20_000, seed=seed).scenario,
        "traditional": builtin_scenario("linear40", N=10, engine="traditional",
                                        slots=20_000, seed=seed).scenario,
    }
    t0 = time.perf_counter()
    for name, sc in cases.items():
        a, b = run(sc).fingerprint(), run(sc).fingerprint()
        res.add(f"{name} repeat", a == b, a[:12] if a == b else f"{a[:12]} != {b[:12]}", "bit-identical")
    res.seconds = time.perf_counter() - t0
    return res


# -- checks over existing logs ---------------------------------------------------

def invariant_checks(logs) -> SuiteResult:
    """Packet conservation and FIFO order on every log."""
    res = SuiteResult("invariants")
    for name, log in logs.items():
        fifo = log.fifo_violations if log.engine == "shadow" else 0
        ok = log.conservation_ok() and fifo == 0
        res.add(f"{name} conservation/FIFO", ok,
                f"conserved={log.conservation_ok()} fifo_violations={fifo}", "exact")
    return res


def stable_series(name, log: MetricsLog):
    """Series expected to be stationary over the trailing half.

    Real totals on the lattice are still draining the start-up surplus at
    any affordable horizon, so only its shadow totals qualify.
    """
    if log.engine != "shadow":
        return {"backlog": log.real_total}
    if name.startswith("grid16"):
        return {"shadow": log.shadow_total}
    return {"shadow": log.shadow_total, "real": log.real_total}


# batch means this correlated (about two standard errors for 50 batches)
# break the interval's independence assumption, so a failure is inconclusive
MIXING_LIMIT = 0.3


def stability_checks(logs) -> SuiteResult:
    res = SuiteResult("stability")
    for name, log in logs.items():
        for label, series in stable_series(name, log).items():
            est = trend_slope(series)
            res.add(f"{name} {label} trend", est.contains_zero(),
                    f"{est.slope:+.2e} [{est.low:+.2e}, {est.high:+.2e}] ac1={est.residual_autocorr:+.2f}",
                    "CI contains 0", known_gap=est.residual_autocorr > MIXING_LIMIT)
    return res


def stability_suite(slots=200_000, seed=1) -> SuiteResult:
    """Stable-regime runs of each engine, checked for trailing-half drift."""
    t0 = time.perf_counter()
    logs = {
        "linear40": run(builtin_scenario("linear40", slots=slots, seed=seed).scenario),
        "diamond8[M=10]": run(builtin_scenario("diamond8", slots=slots, seed=seed).scenario),
        "traditional[N=10]": run(builtin_scenario("linear40", N=10, engine="traditional",
                                                  slots=slots, seed=seed).scenario),
    }
    res = stability_checks(logs)
    res.checks += invariant_checks(logs).checks
    res.logs = logs
    res.seconds = time.perf_counter() - t0
    return res


SUITES = {
    "oracle": oracle_suite,
    "profile": profile_suite,
    "grid": grid_suite,
    "diamond": diamond_suite,
    "tradeoff": tradeoff_suite,
    "solver": solver_suite,
    "determinism": determinism_suite,
    "scaling": scaling_suite,
    "equivalence": equivalence_suite,
    "stability": stability_suite,
}
