"""Scenario files: a YAML document describing network, flows, engine,
parameters and run settings.

Grammar (all sections are mappings; unknown keys are rejected)::

    name: <str>                      # optional
    topology:                        # either this ...
      kind: linear | grid | diamond
      N: <int>                       # linear: number of links
      side: <int>                    # grid: lattice side (default 4)
      capacity: <int>                # default 10
      long: <traffic>                # linear: flow 0
      short: <traffic>               # linear: flows 1..N
      traffic: <traffic>             # grid: every flow
      lambda: <float>                # diamond: rate of both flows
    network:                         # ... or an explicit network
      nodes: <int>
      links: [[tail, head, capacity], ...]
      interference: none | node_exclusive
      c_max: <int>
    flows:
      - {id, source, destination, route: [..], traffic: <traffic>}
    engine: traditional | shadow | minresource
    params: {M, beta, epsilon, x_max}
    run: {slots, warmup, seed, replications}

    <traffic> := {kind: inelastic, lambda: <float>, epsilon: <float>}
               | {kind: elastic, utility: log | {alpha: <float>}, x_max: <float>}
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, replace
from typing import Optional

import yaml

from . import topologies
from .harness import ENGINES, ConfigError, Scenario
from .network import (AlphaFairUtility, Elastic, FlowSpec, Inelastic, LogUtility,
                      NetworkError, build_network)


class ScenarioParseError(ValueError):
    """Malformed scenario text or structure (exit status 2 in the CLI)."""

    def __init__(self, message, line=None, column=None, path=()):
        self.message = message
        self.line = line
        self.column = column
        self.path = tuple(path)
        super().__init__(self._render())

    def _render(self):
        where = f" (line {self.line}, column {self.column})" if self.line is not None else ""
        return self.message + where

    def at(self, line, column):
        self.line, self.column = line, column
        self.args = (self._render(),)
        return self


TOP_KEYS = {"name", "topology", "network", "flows", "engine", "params", "run"}
TOPOLOGY_KEYS = {"kind", "N", "side", "capacity", "long", "short", "traffic", "lambda"}
NETWORK_KEYS = {"nodes", "links", "interference", "c_max"}
FLOW_KEYS = {"id", "source", "destination", "route", "traffic"}
TRAFFIC_KEYS = {"kind", "lambda", "epsilon", "utility", "x_max"}
PARAM_KEYS = {"M", "beta", "epsilon", "x_max"}
RUN_KEYS = {"slots", "warmup", "seed", "replications"}


@dataclass(frozen=True)
class ScenarioSpec:
    """A scenario plus the settings that live outside a single run."""

    scenario: Scenario
    replications: int = 1
    topology: Optional[dict] = None


def _name(path):
    out = ""
    for p in path:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out or "scenario"


def _fail(path, message):
    raise ScenarioParseError(f"{_name(path)}: {message}", path=path)


def _check_keys(section, allowed, path):
    if not isinstance(section, dict):
        _fail(path, "expected a mapping")
    for key in section:
        if key not in allowed:
            raise ScenarioParseError(f"{_name(path)}: unknown key {key!r}",
                                     path=tuple(path) + (key,))


def _get(section, key, path, cast, default=None, required=False):
    if key not in section or section[key] is None:
        if required:
            _fail(path, f"missing required key {key!r}")
        return default
    value = section[key]
    try:
        if cast is int and (isinstance(value, bool) or float(value) != int(value)):
            raise ValueError
        return cast(value)
    except (TypeError, ValueError):
        raise ScenarioParseError(f"{_name(path)}.{key}: expected {cast.__name__}, got {value!r}",
                                 path=tuple(path) + (key,)) from None


def parse_traffic(doc, path=("traffic",)):
    _check_keys(doc, TRAFFIC_KEYS, path)
    kind = doc.get("kind")
    if kind == "inelastic":
        extra = set(doc) - {"kind", "lambda", "epsilon"}
        if extra:
            _fail(path, f"inelastic traffic takes lambda and epsilon only, not {sorted(extra)}")
        return Inelastic(_get(doc, "lambda", path, float, required=True),
                         _get(doc, "epsilon", path, float, 0.0))
    if kind == "elastic":
        extra = set(doc) - {"kind", "utility", "x_max"}
        if extra:
            _fail(path, f"elastic traffic takes utility and x_max only, not {sorted(extra)}")
        u = doc.get("utility", "log")
        if u == "log":
            utility = LogUtility()
        elif isinstance(u, dict) and set(u) == {"alpha"}:
            utility = AlphaFairUtility(_get(u, "alpha", tuple(path) + ("utility",), float))
        else:
            _fail(tuple(path) + ("utility",), "expected 'log' or {alpha: <float>}")
        if "x_max" in doc:
            return Elastic(utility, _get(doc, "x_max", path, float))
        return Elastic(utility)
    _fail(tuple(path) + ("kind",), "expected 'inelastic' or 'elastic'")


def dump_traffic(t):
    if isinstance(t, Inelastic):
        return {"kind": "inelastic", "lambda": t.rate, "epsilon": t.epsilon}
    u = "log" if isinstance(t.utility, LogUtility) else {"alpha": t.utility.alpha}
    return {"kind": "elastic", "utility": u, "x_max": t.x_max}


def build_topology(doc):
    """Network and flows for a built-in topology description."""
    path = ("topology",)
    _check_keys(doc, TOPOLOGY_KEYS, path)
    kind = doc.get("kind")
    cap = _get(doc, "capacity", path, int, 10)

    def traffic(key, default):
        return parse_traffic(doc.get(key, default), path + (key,))

    if kind == "linear":
        N = _get(doc, "N", path, int, required=True)
        long = traffic("long", {"kind": "inelastic", "lambda": 5.0})
        short = traffic("short", {"kind": "inelastic", "lambda": 2.5})
        return topologies.linear_network(N, cap), topologies.linear_flows(N, long, short)
    if kind == "grid":
        side = _get(doc, "side", path, int, 4)
        t = traffic("traffic", {"kind": "elastic", "utility": "log"})
        return topologies.grid_network(side, cap), topologies.grid_flows(side, t)
    if kind == "diamond":
        lam = _get(doc, "lambda", path, float, 5.0)
        return topologies.diamond_network(cap), topologies.diamond_flows(lam)
    _fail(path + ("kind",), "expected linear, grid or diamond")


def _explicit_network(doc):
    net = doc["network"]
    _check_keys(net, NETWORK_KEYS, ("network",))
    links = net.get("links")
    if not isinstance(links, list):
        _fail(("network", "links"), "expected a list of [tail, head, capacity]")
    for i, l in enumerate(links):
        if not (isinstance(l, list) and len(l) == 3
                and all(isinstance(v, int) and not isinstance(v, bool) for v in l)):
            raise ScenarioParseError(f"network.links[{i}]: expected [tail, head, capacity] integers",
                                     path=("network", "links", i))
    _get(net, "nodes", ("network",), int, required=True)
    flows_doc = doc["flows"]
    if not isinstance(flows_doc, list):
        _fail(("flows",), "expected a list")
    flows = []
    for i, f in enumerate(flows_doc):
        path = ("flows", i)
        _check_keys(f, FLOW_KEYS, path)
        route = f.get("route")
        if route is not None and not (isinstance(route, list)
                                      and all(isinstance(v, int) for v in route)):
            _fail(path + ("route",), "expected a list of node ids")
        if "traffic" not in f:
            _fail(path, "missing required key 'traffic'")
        flows.append(FlowSpec(_get(f, "id", path, int, required=True),
                              _get(f, "source", path, int, required=True),
                              _get(f, "destination", path, int, required=True),
                              parse_traffic(f["traffic"], path + ("traffic",)),
                              tuple(route) if route is not None else None))
    return build_network(net), tuple(flows)


def scenario_from_dict(doc) -> ScenarioSpec:
    """Scenario from a parsed document.

    Structural problems raise :class:`ScenarioParseError`; well-formed
    documents whose values break a model invariant raise ``ConfigError``.
    """
    _check_keys(doc, TOP_KEYS, ())
    topo = doc.get("topology")
    if topo is not None:
        if "network" in doc or "flows" in doc:
            _fail(("topology",), "give either topology or network/flows, not both")
        try:
            network, flows = build_topology(topo)
        except NetworkError as exc:
            raise ConfigError(str(exc)) from exc
    else:
        if "network" not in doc or "flows" not in doc:
            _fail((), "needs network and flows (or a topology)")
        try:
            network, flows = _explicit_network(doc)
        except NetworkError as exc:
            raise ConfigError(str(exc)) from exc
    params = doc.get("params") or {}
    run = doc.get("run") or {}
    _check_keys(params, PARAM_KEYS, ("params",))
    _check_keys(run, RUN_KEYS, ("run",))
    engine = doc.get("engine", "shadow")
    if engine not in ENGINES:
        _fail(("engine",), f"expected one of {', '.join(ENGINES)}")
    default_M = 0.0 if engine == "minresource" else 1000.0
    p, r = ("params",), ("run",)
    sc = Scenario(
        network=network,
        flows=flows,
        engine=engine,
        M=_get(params, "M", p, float, default_M),
        beta=_get(params, "beta", p, float, 1.0),
        epsilon=_get(params, "epsilon", p, float),
        x_max=_get(params, "x_max", p, float),
        slots=_get(run, "slots", r, int, 10_000),
        warmup=_get(run, "warmup", r, int),
        seed=_get(run, "seed", r, int, 0),
        name=str(doc.get("name", "custom")),
    )
    reps = _get(run, "replications", r, int, 1)
    if reps < 1:
        raise ConfigError("replications must be at least 1")
    return ScenarioSpec(sc, reps, dict(topo) if topo is not None else None)


def locate(text, path):
    """1-based (line, column) of the node at ``path`` in YAML ``text``, or
    of the deepest ancestor that exists."""
    try:
        node = yaml.compose(text)
    except yaml.YAMLError:
        return None
    mark = node.start_mark if node is not None else None
    for key in path:
        if isinstance(node, yaml.MappingNode):
            hit = next(((k, v) for k, v in node.value if k.value == str(key)), None)
            if hit is None:
                break
            mark = hit[0].start_mark
            node = hit[1]
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
            mark = node.start_mark
        else:
            break
    return None if mark is None else (mark.line + 1, mark.column + 1)


def parse_document(text) -> dict:
    """YAML text to a mapping; syntax errors carry 1-based line/column."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        if mark is not None:
            raise ScenarioParseError(f"YAML error: {exc.problem}", mark.line + 1,
                                     mark.column + 1) from exc
        raise ScenarioParseError(f"YAML error: {exc}") from exc
    if not isinstance(doc, dict):
        raise ScenarioParseError("scenario document must be a mapping", 1, 1)
    return doc


def load_scenario_text(text) -> ScenarioSpec:
    doc = parse_document(text)
    try:
        return scenario_from_dict(doc)
    except ScenarioParseError as exc:
        pos = locate(text, exc.path)
        raise (exc.at(*pos) if pos else exc)


def load_scenario(path) -> ScenarioSpec:
    with open(path, encoding="utf-8") as fh:
        return load_scenario_text(fh.read())


def scenario_to_dict(spec: ScenarioSpec) -> dict:
    """Explicit (network/flows) form of a scenario."""
    sc = spec.scenario
    net = sc.network
    return {
        "name": sc.name,
        "network": {
            "nodes": net.num_nodes,
            "interference": net.interference,
            "c_max": net.c_max,
            "links": [[l.tail, l.head, l.capacity] for l in net.links],
        },
        "flows": [
            {"id": f.id, "source": f.source, "destination": f.destination,
             **({"route": list(f.route)} if f.route is not None else {}),
             "traffic": dump_traffic(f.traffic)}
            for f in sc.flows
        ],
        "engine": sc.engine,
        "params": {"M": sc.M, "beta": sc.beta, "epsilon": sc.epsilon, "x_max": sc.x_max},
        "run": {"slots": sc.slots, "warmup": sc.warmup, "seed": sc.seed,
                "replications": spec.replications},
    }


def dump_scenario(spec: ScenarioSpec) -> str:
    return yaml.safe_dump(scenario_to_dict(spec), sort_keys=False, default_flow_style=None)


# -- built-ins -----------------------------------------------------------------

BUILTINS = {
    "linear40": {
        "name": "linear40",
        "topology": {"kind": "linear", "N": 40, "capacity": 10,
                     "long": {"kind": "inelastic", "lambda": 5.0},
                     "short": {"kind": "inelastic", "lambda": 2.5}},
        "engine": "shadow",
        "params": {"beta": 0.99},
        "run": {"slots": 200_000, "seed": 1},
    },
    "chain5": {
        "name": "chain5",
        "topology": {"kind": "linear", "N": 5, "capacity": 10,
                     "long": {"kind": "elastic", "utility": "log"},
                     "short": {"kind": "elastic", "utility": "log"}},
        "engine": "shadow",
        "params": {"M": 1000.0, "beta": 0.99},
        "run": {"slots": 500_000, "seed": 1},
    },
    "grid16": {
        "name": "grid16",
        "topology": {"kind": "grid", "side": 4, "capacity": 10,
                     "traffic": {"kind": "elastic", "utility": "log"}},
        "engine": "shadow",
        "params": {"M": 1000.0, "beta": 0.99},
        "run": {"slots": 200_000, "seed": 1},
    },
    "diamond8": {
        "name": "diamond8",
        "topology": {"kind": "diamond", "capacity": 10, "lambda": 5.0},
        "engine": "minresource",
        "params": {"M": 10.0},
        "run": {"slots": 200_000, "seed": 1},
    },
}


def builtin_dict(name):
    if name not in BUILTINS:
        raise ConfigError(f"unknown built-in scenario {name!r}; choose from {sorted(BUILTINS)}")
    return copy.deepcopy(BUILTINS[name])


def resolve_source(source):
    """``(document, text)`` for a built-in name or a YAML file path; text is
    ``None`` for built-ins."""
    if source in BUILTINS:
        return builtin_dict(source), None
    try:
        with open(source, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario {source!r}: {exc}") from exc
    return parse_document(text), text


OVERRIDE_KEYS = {
    "M": ("params", "M", float),
    "beta": ("params", "beta", float),
    "epsilon": ("params", "epsilon", float),
    "x_max": ("params", "x_max", float),
    "slots": ("run", "slots", int),
    "warmup": ("run", "warmup", int),
    "seed": ("run", "seed", int),
    "replications": ("run", "replications", int),
}


def _cast_override(key, value, cast):
    try:
        x = float(value)
        if cast is int:
            if x != int(x):
                raise ValueError
            return int(x)
        return x
    except (TypeError, ValueError):
        raise ScenarioParseError(f"{key}: expected {cast.__name__}, got {value!r}") from None


def apply_override(doc, key, value):
    """Set ``key`` (a parameter, run setting, ``engine``, ``lambda`` or
    ``N``) on a scenario document in place."""
    if key in OVERRIDE_KEYS:
        section, field, cast = OVERRIDE_KEYS[key]
        doc.setdefault(section, {})
        doc[section][field] = _cast_override(key, value, cast)
    elif key == "engine":
        doc["engine"] = str(value)
    elif key == "lambda":
        lam = _cast_override(key, value, float)
        topo = doc.get("topology")
        if topo is not None:
            if topo.get("kind") == "diamond":
                topo["lambda"] = lam
            elif topo.get("kind") == "linear":
                for part in ("long", "short"):
                    t = topo.setdefault(part, {"kind": "inelastic", "lambda": lam})
                    if t.get("kind") != "inelastic":
                        raise ConfigError("lambda applies to inelastic flows only")
                    t["lambda"] = lam
            else:
                raise ConfigError("lambda override needs inelastic flows")
        else:
            for f in doc.get("flows", []):
                if f.get("traffic", {}).get("kind") != "inelastic":
                    raise ConfigError("lambda applies to inelastic flows only")
                f["traffic"]["lambda"] = lam
    elif key == "N":
        topo = doc.get("topology")
        if not topo or topo.get("kind") != "linear":
            raise ConfigError("N override needs a linear topology")
        topo["N"] = _cast_override(key, value, int)
    else:
        raise ScenarioParseError(f"unknown parameter {key!r}")
    return doc


def parse_overrides(items):
    out = []
    for item in items or []:
        if "=" not in item:
            raise ScenarioParseError(f"override {item!r} is not key=value")
        k, v = item.split("=", 1)
        out.append((k.strip(), v.strip()))
    return out


def with_seed(spec: ScenarioSpec, seed) -> ScenarioSpec:
    return replace(spec, scenario=replace(spec.scenario, seed=seed))
