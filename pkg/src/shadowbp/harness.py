"""Seeded slot loop, metric collection and trend statistics."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from operator import add
from typing import NamedTuple, Optional

import numpy as np
from scipy import stats

from .minresource import MinResourceEngine
from .network import Elastic, Inelastic, Network, NetworkError
from .shadow import ShadowEngine
from .traditional import TraditionalEngine
from .traffic import SourceParams, make_rng

ENGINES = ("traditional", "shadow", "minresource")


class ConfigError(ValueError):
    """Scenario fails validation before slot 0."""


@dataclass(frozen=True)
class Scenario:
    network: Network
    flows: tuple
    engine: str = "shadow"
    M: float = 1000.0
    beta: float = 1.0
    epsilon: Optional[float] = None
    x_max: Optional[float] = None
    slots: int = 10_000
    warmup: Optional[int] = None
    seed: int = 0
    name: str = "custom"

    @property
    def warmup_slots(self):
        return self.slots // 2 if self.warmup is None else self.warmup

    def resolved_flows(self):
        """Flows with scenario-level ``epsilon``/``x_max`` overrides applied."""
        out = []
        for f in self.flows:
            t = f.traffic
            if isinstance(t, Inelastic) and self.epsilon is not None:
                t = Inelastic(t.rate, self.epsilon)
            elif isinstance(t, Elastic) and self.x_max is not None:
                t = Elastic(t.utility, self.x_max)
            out.append(replace(f, traffic=t))
        return tuple(out)

    def validate(self):
        if self.engine not in ENGINES:
            raise ConfigError(f"unknown engine {self.engine!r}")
        if self.slots < 0:
            raise ConfigError("slot count must be nonnegative")
        W = self.warmup_slots
        if self.slots == 0:
            if W != 0:
                raise ConfigError("warmup must be 0 when no slots are run")
        elif not 0 <= W < self.slots:
            raise ConfigError("warmup must satisfy 0 <= W < T")
        if not 0 < self.beta <= 1:
            raise ConfigError("beta must lie in (0, 1]")
        if self.epsilon is not None and not 0 <= self.epsilon <= 1:
            raise ConfigError("epsilon must lie in [0, 1]")
        if self.engine == "minresource":
            if self.M < 0:
                raise ConfigError("M must be nonnegative")
        elif not self.M > 0 and self.engine == "shadow":
            raise ConfigError("M must be positive")
        if not self.flows:
            raise ConfigError("scenario has no flows")
        if self.engine != "shadow":
            for f in self.flows:
                if not isinstance(f.traffic, Inelastic):
                    raise ConfigError(f"flow {f.id}: {self.engine} engine needs inelastic traffic")
        try:
            self.build_engine()
        except (NetworkError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def build_engine(self, **kwargs):
        flows = self.resolved_flows()
        if self.engine == "traditional":
            return TraditionalEngine(self.network, flows, **kwargs)
        if self.engine == "shadow":
            return ShadowEngine(self.network, flows, SourceParams(self.M, self.beta), **kwargs)
        return MinResourceEngine(self.network, flows, M=self.M, **kwargs)


@dataclass
class MetricsLog:
    engine: str
    slots: int
    warmup: int
    # per-slot end-of-slot totals; for engines without shadow counters both
    # series hold the physical backlog
    shadow_total: np.ndarray
    real_total: np.ndarray
    avg_queue: dict = field(default_factory=dict)
    avg_fifo: dict = field(default_factory=dict)
    served: dict = field(default_factory=dict)
    real_served: dict = field(default_factory=dict)
    injected: dict = field(default_factory=dict)
    delivered: dict = field(default_factory=dict)
    shadow_injected: dict = field(default_factory=dict)
    window_injected: dict = field(default_factory=dict)
    window_delivered: dict = field(default_factory=dict)
    queued: dict = field(default_factory=dict)
    latency_sum: int = 0
    latency_count: int = 0
    mean_rate: dict = field(default_factory=dict)
    fifo_violations: int = 0
    routes: dict = field(default_factory=dict)

    @property
    def window(self):
        return self.slots - self.warmup

    def mean_shadow_total(self):
        return float(self.shadow_total[self.warmup:].mean()) if self.window else 0.0

    def mean_real_total(self):
        return float(self.real_total[self.warmup:].mean()) if self.window else 0.0

    def mean_latency(self):
        return self.latency_sum / self.latency_count if self.latency_count else 0.0

    def allocation(self):
        """Window-averaged service rate per ``(link, flow or destination)``."""
        if not self.window:
            return {}
        return {k: v / self.window for k, v in self.served.items()}

    def conservation_ok(self):
        """Injected equals queued plus delivered for every flow or destination."""
        return all(self.injected_by_key(k) == self.queued.get(k, 0) + self.delivered.get(k, 0)
                   for k in set(self.queued) | set(self.delivered))

    def injected_by_key(self, key):
        return self.injected.get(key, 0)

    def fingerprint(self):
        h = hashlib.sha256()
        h.update(self.shadow_total.tobytes())
        h.update(self.real_total.tobytes())
        for k, v in sorted(self.__dict__.items()):
            if k in ("shadow_total", "real_total"):
                continue
            if isinstance(v, dict):
                v = sorted((repr(a), b) for a, b in v.items())
            h.update(json.dumps([k, v], default=str).encode())
        return h.hexdigest()


def _snapshot(engine):
    snap = {"served": dict(engine.served),
            "injected": list(engine.injected),
            "delivered": list(engine.delivered)}
    if engine.kind == "shadow":
        snap["real_served"] = list(engine.real_served)
        snap["latency_sum"] = engine.latency_sum
        snap["latency_count"] = engine.latency_count
        snap["rate_sum"] = list(engine.rate_sum)
    return snap


def run(scenario: Scenario, engine=None, trace=None) -> MetricsLog:
    """Simulate ``scenario`` and return its metrics.

    The result is a deterministic function of the scenario including its
    seed.  ``trace``, if a list, receives a copy of the scheduling queue
    state after every slot.
    """
    scenario.validate()
    T = scenario.slots
    W = scenario.warmup_slots
    rng = make_rng(scenario.seed)
    eng = engine or scenario.build_engine()
    kind = eng.kind

    shadow_series = np.zeros(T, dtype=np.int64)
    real_series = np.zeros(T, dtype=np.int64)
    acc_q = [0] * len(eng.q)
    acc_p = [0] * scenario.network.num_links if kind == "shadow" else None
    snap = _snapshot(eng)

    for t in range(T):
        if t == W:
            snap = _snapshot(eng)
        eng.advance(rng)
        if kind == "shadow":
            shadow_series[t] = eng.shadow_total
            real_series[t] = eng.real_total
        else:
            shadow_series[t] = real_series[t] = eng.total
        if trace is not None:
            trace.append(tuple(eng.q))
        if t >= W:
            acc_q = list(map(add, acc_q, eng.q))
            if acc_p is not None:
                acc_p = list(map(add, acc_p, eng.fifo_len))

    return _collect(scenario, eng, T, W, shadow_series, real_series, acc_q, acc_p, snap)


def _collect(scenario, eng, T, W, shadow_series, real_series, acc_q, acc_p, snap):
    window = T - W
    log = MetricsLog(engine=eng.kind, slots=T, warmup=W,
                     shadow_total=shadow_series, real_total=real_series)
    flows = eng.flows
    if eng.kind == "minresource":
        entries = eng.entries()
        keys = list(eng.dests)
        log.injected = {}
        for k, f in enumerate(flows):
            log.injected[f.destination] = log.injected.get(f.destination, 0) + eng.injected[k]
        log.delivered = {d: eng.delivered[i] for i, d in enumerate(keys)}
        queued = {d: 0 for d in keys}
        for node, d, e in eng.entries():
            queued[d] += eng.q[e]
        log.queued = queued
        win_inj = {}
        for k, f in enumerate(flows):
            win_inj[f.destination] = (win_inj.get(f.destination, 0)
                                      + eng.injected[k] - snap["injected"][k])
        log.window_injected = win_inj
        log.window_delivered = {d: eng.delivered[i] - snap["delivered"][i]
                                for i, d in enumerate(keys)}
    else:
        entries = eng.table.entries()
        log.routes = {f.id: list(f.route) for f in flows}
        log.injected = {f.id: eng.injected[k] for k, f in enumerate(flows)}
        log.delivered = {f.id: eng.delivered[k] for k, f in enumerate(flows)}
        log.window_injected = {f.id: eng.injected[k] - snap["injected"][k]
                               for k, f in enumerate(flows)}
        log.window_delivered = {f.id: eng.delivered[k] - snap["delivered"][k]
                                for k, f in enumerate(flows)}
        if eng.kind == "shadow":
            log.queued = {f.id: eng.queued_by_flow[k] for k, f in enumerate(flows)}
            log.shadow_injected = {f.id: eng.shadow_injected[k] for k, f in enumerate(flows)}
        else:
            log.queued = {f.id: eng.flow_backlog(f.id) for f in flows}
    if window:
        log.avg_queue = {(node, key): acc_q[e] / window for node, key, e in entries}
        if acc_p is not None:
            log.avg_fifo = {l: v / window for l, v in enumerate(acc_p)}
    before = snap["served"]
    log.served = {k: v - before.get(k, 0) for k, v in sorted(eng.served.items())
                  if v - before.get(k, 0)}
    if eng.kind == "shadow":
        log.real_served = {l: v - snap["real_served"][l]
                           for l, v in enumerate(eng.real_served)}
        log.latency_sum = eng.latency_sum - snap["latency_sum"]
        log.latency_count = eng.latency_count - snap["latency_count"]
        log.fifo_violations = eng.fifo_violations
        if window:
            log.mean_rate = {f.id: (eng.rate_sum[k] - snap["rate_sum"][k]) / window
                             for k, f in enumerate(flows)}
    return log


# -- statistics --------------------------------------------------------------

class SlopeEstimate(NamedTuple):
    slope: float
    low: float
    high: float
    # lag-1 autocorrelation of the regression residuals; well above zero
    # means the points are not independent and the interval is too narrow
    residual_autocorr: float = 0.0

    def contains_zero(self):
        return self.low <= 0.0 <= self.high


def trend_slope(series, window=0.5, batches=50, confidence=0.95) -> SlopeEstimate:
    """Least-squares slope (per slot) over the trailing ``window`` fraction.

    The trailing segment is reduced to ``batches`` consecutive batch means
    before regression so that slot-to-slot autocorrelation of queue series
    does not shrink the confidence interval.  Short segments are regressed
    point by point.
    """
    if not 0 < window <= 1:
        raise ValueError("window must lie in (0, 1]")
    y = np.asarray(series, dtype=float)
    n = int(round(len(y) * window))
    if n < 2:
        raise ValueError("need at least 2 points in the trailing window")
    y = y[len(y) - n:]
    x = np.arange(n, dtype=float)
    if batches and n >= 2 * batches:
        size = n // batches
        cut = size * batches
        y = y[n - cut:].reshape(batches, size).mean(axis=1)
        x = x[n - cut:].reshape(batches, size).mean(axis=1)
    if len(y) == 2:
        slope = (y[1] - y[0]) / (x[1] - x[0])
        return SlopeEstimate(float(slope), float(slope), float(slope))
    res = stats.linregress(x, y)
    resid = y - (res.intercept + res.slope * x)
    denom = float(np.dot(resid, resid))
    ac = float(np.dot(resid[:-1], resid[1:]) / denom) if denom > 0 else 0.0
    if res.stderr == 0 or not np.isfinite(res.stderr):
        return SlopeEstimate(float(res.slope), float(res.slope), float(res.slope), ac)
    half = stats.t.ppf(0.5 + confidence / 2, len(y) - 2) * res.stderr
    return SlopeEstimate(float(res.slope), float(res.slope - half), float(res.slope + half), ac)


def hop_profile(log: MetricsLog, flow_id):
    """Time-averaged queue of ``flow_id`` at each route node except the
    destination, in route order (source first)."""
    if log.engine == "minresource":
        raise ValueError("hop profiles need fixed routes")
    route = log.routes[flow_id]
    return np.array([log.avg_queue.get((node, flow_id), 0.0) for node in route[:-1]])


def linear_fit(values):
    """Slope and R^2 of ``values`` against their index."""
    y = np.asarray(values, dtype=float)
    res = stats.linregress(np.arange(len(y), dtype=float), y)
    return float(res.slope), float(res.rvalue ** 2)


def littles_law(log: MetricsLog):
    """(mean real backlog, throughput * mean latency) over the window."""
    if not log.window or not log.latency_count:
        return 0.0, 0.0
    throughput = log.latency_count / log.window
    return log.mean_real_total(), throughput * log.mean_latency()


def equivalence_traces(scenario: Scenario, tie_break="lowest"):
    """Run the shadow engine, then traditional back-pressure fed the same
    shadow arrival stream; return both per-slot queue traces."""
    sc = replace(scenario, engine="shadow")
    sc.validate()
    rng = make_rng(sc.seed)
    shadow = sc.build_engine()
    trad = TraditionalEngine(sc.network, sc.resolved_flows(), tie_break=tie_break)
    s_trace, t_trace = [], []
    for _ in range(sc.slots):
        s_arr, r_arr, rates = shadow.draw_arrivals(rng)
        shadow.step(s_arr, r_arr, rates)
        trad.step(s_arr)
        s_trace.append(tuple(shadow.q))
        t_trace.append(tuple(trad.q))
    return s_trace, t_trace
