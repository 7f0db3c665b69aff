import pytest
from hypothesis import given, strategies as st

from shadowbp import ConfigError, Elastic, Inelastic
from shadowbp.network import AlphaFairUtility
from shadowbp.scenario_io import (BUILTINS, ScenarioParseError, apply_override, builtin_dict,
                                  dump_scenario, load_scenario, load_scenario_text, locate,
                                  parse_overrides, scenario_from_dict, scenario_to_dict)

CHAIN = """\
name: tiny
network:
  nodes: 3
  interference: node_exclusive
  links: [[0, 1, 10], [1, 2, 10]]
flows:
  - id: 0
    source: 0
    destination: 2
    route: [0, 1, 2]
    traffic: {kind: inelastic, lambda: 3.0}
  - id: 1
    source: 1
    destination: 2
    traffic: {kind: elastic, utility: {alpha: 2.0}, x_max: 12}
engine: shadow
params: {M: 500, beta: 0.9}
run: {slots: 100, seed: 5, replications: 2}
"""


def test_load_explicit(tmp_path):
    p = tmp_path / "s.yaml"
    p.write_text(CHAIN)
    spec = load_scenario(str(p))
    sc = spec.scenario
    assert sc.name == "tiny" and sc.M == 500 and sc.beta == 0.9
    assert sc.slots == 100 and sc.seed == 5 and spec.replications == 2
    assert sc.network.num_links == 2
    assert sc.flows[0].traffic == Inelastic(3.0)
    t = sc.flows[1].traffic
    assert isinstance(t, Elastic) and t.x_max == 12 and isinstance(t.utility, AlphaFairUtility)
    assert sc.flows[1].route is None


@pytest.mark.parametrize("name", sorted(BUILTINS))
def test_round_trip(name):
    spec = scenario_from_dict(builtin_dict(name))
    again = load_scenario_text(dump_scenario(spec))
    assert again.scenario == spec.scenario
    assert scenario_to_dict(again) == scenario_to_dict(spec)


def test_round_trip_explicit():
    spec = load_scenario_text(CHAIN)
    assert load_scenario_text(dump_scenario(spec)) == spec


@pytest.mark.parametrize("text,line,col,match", [
    (CHAIN.replace("  nodes: 3", "  nodes: 3\n  colour: red"), 4, 3, "unknown key 'colour'"),
    (CHAIN.replace("beta: 0.9", "beta: high"), 17, 18, "expected float"),
    (CHAIN.replace("engine: shadow", "engine: fluid"), 16, 1, "engine"),
    (CHAIN.replace("kind: inelastic", "kind: bursty"), 11, 15, "inelastic' or 'elastic"),
    (CHAIN.replace("[1, 2, 10]]", "[1, 2]]"), 5, 23, r"links\[1\]"),
    ("a: [1, 2\nb: 3\n", 2, 2, "YAML error"),
])
def test_parse_errors_carry_position(text, line, col, match):
    with pytest.raises(ScenarioParseError, match=match) as info:
        load_scenario_text(text)
    assert (info.value.line, info.value.column) == (line, col)
    assert f"line {line}, column {col}" in str(info.value)


def test_structure_errors():
    with pytest.raises(ScenarioParseError, match="mapping"):
        load_scenario_text("- 1\n- 2\n")
    with pytest.raises(ScenarioParseError, match="network and flows"):
        load_scenario_text("name: x\n")
    with pytest.raises(ScenarioParseError, match="not both"):
        scenario_from_dict({"topology": {"kind": "diamond"}, "flows": []})


@pytest.mark.parametrize("patch,match", [
    (("lambda: 3.0", "lambda: -1"), "lambda"),
    (("[1, 2, 10]]", "[1, 2, 11]]"), "capacity"),
    (("[0, 1, 2]", "[0, 2]"), "route"),
    (("beta: 0.9", "beta: 0"), "beta"),
    (("replications: 2", "replications: 0"), "replications"),
])
def test_invariant_errors_are_config_errors(patch, match):
    with pytest.raises(ConfigError, match=match):
        spec = load_scenario_text(CHAIN.replace(*patch))
        spec.scenario.validate()


def test_locate():
    assert locate(CHAIN, ("params", "beta")) == (17, 18)
    assert locate(CHAIN, ("flows", 1, "traffic")) == (15, 5)
    # a missing key resolves to its deepest existing ancestor
    assert locate(CHAIN, ("params", "nope")) == (17, 1)
    assert locate("a: [", ("a",)) is None


def test_overrides():
    doc = builtin_dict("linear40")
    for k, v in parse_overrides(["N=10", "beta = 0.5", "slots=2e3", "lambda=4", "engine=traditional"]):
        apply_override(doc, k, v)
    sc = scenario_from_dict(doc).scenario
    assert sc.network.num_links == 10 and sc.beta == 0.5 and sc.slots == 2000
    assert sc.engine == "traditional" and all(f.traffic.rate == 4 for f in sc.flows)
    doc = builtin_dict("diamond8")
    apply_override(doc, "lambda", "7")
    apply_override(doc, "M", "0")
    sc = scenario_from_dict(doc).scenario
    assert sc.M == 0 and {f.traffic.rate for f in sc.flows} == {7.0}


@pytest.mark.parametrize("item,exc", [
    ("colour=red", ScenarioParseError),
    ("beta", ScenarioParseError),
    ("slots=1.5", ScenarioParseError),
    ("M=abc", ScenarioParseError),
])
def test_bad_overrides(item, exc):
    doc = builtin_dict("linear40")
    with pytest.raises(exc):
        for k, v in parse_overrides([item]):
            apply_override(doc, k, v)


def test_override_context_errors():
    with pytest.raises(ConfigError):
        apply_override(builtin_dict("grid16"), "lambda", "3")
    with pytest.raises(ConfigError):
        apply_override(builtin_dict("grid16"), "N", "3")
    with pytest.raises(ConfigError):
        apply_override(builtin_dict("chain5"), "lambda", "3")
    with pytest.raises(ConfigError):
        builtin_dict("ring9")


def test_builtins_validate():
    for name in BUILTINS:
        scenario_from_dict(builtin_dict(name)).scenario.validate()
    assert builtin_dict("linear40") is not builtin_dict("linear40")


@given(st.floats(0.01, 1.0), st.integers(0, 10**6), st.integers(1, 10**6))
def test_round_trip_params(beta, seed, slots):
    doc = builtin_dict("chain5")
    apply_override(doc, "beta", beta)
    apply_override(doc, "seed", seed)
    apply_override(doc, "slots", slots)
    spec = scenario_from_dict(doc)
    again = load_scenario_text(dump_scenario(spec))
    assert again.scenario == spec.scenario and again.replications == spec.replications
