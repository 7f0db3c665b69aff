import pytest
from hypothesis import given, strategies as st

from shadowbp import Elastic, FlowSpec, Inelastic, Link, Network, NetworkError
from shadowbp.topologies import grid_flows, grid_network, linear_network
from shadowbp.traditional import TraditionalEngine, traditional_weights
from shadowbp.traffic import make_rng


def chain(cap=10):
    net = Network(3, (Link(0, 1, cap), Link(1, 2, cap)))
    return net, (FlowSpec(0, 0, 2, Inelastic(1.0), (0, 1, 2)),)


def test_weights_single_flow():
    net, flows = chain()
    w = traditional_weights({(0, 0): 5, (1, 0): 2}, net, flows)
    assert w.weights == (3, 2) and w.argmax == (0, 0)


def test_weights_tie_goes_to_lower_id():
    net = Network(2, (Link(0, 1, 10),))
    flows = (FlowSpec(3, 0, 1, Inelastic(1.0), (0, 1)), FlowSpec(8, 0, 1, Inelastic(1.0), (0, 1)))
    w = traditional_weights({(0, 3): 4, (0, 8): 4}, net, flows)
    assert w.weights == (4,) and w.argmax == (3,)
    eng = TraditionalEngine(net, flows, tie_break="highest")
    eng.set_queues({(0, 3): 4, (0, 8): 4})
    assert eng.weights().argmax == (8,)


def test_negative_weight_inactive():
    net, flows = chain()
    eng = TraditionalEngine(net, flows)
    eng.set_queues({(1, 0): 7})
    assert eng.weights().weights == (-7, 7)
    moves = eng.step([0])
    assert [m[0] for m in moves] == [1]


def test_links_without_carriers():
    net = linear_network(3)
    flows = (FlowSpec(0, 0, 1, Inelastic(1.0), (0, 1)),)
    w = traditional_weights({(0, 0): 2}, net, flows)
    assert w.weights == (2, None, None)


def test_step_simultaneous_reads():
    net, flows = chain(cap=4)
    eng = TraditionalEngine(net, flows)
    eng.set_queues({(0, 0): 5, (1, 0): 2})
    eng.step([0])
    assert [eng.queue(n, 0) for n in range(3)] == [1, 4, 0]
    assert eng.delivered == [2] and eng.total == 5


def test_empty_is_fixed_point():
    net, flows = chain()
    eng = TraditionalEngine(net, flows)
    eng.step([0])
    assert eng.q == [0, 0, 0] and eng.total == 0


def test_arrivals_after_service():
    net, flows = chain()
    eng = TraditionalEngine(net, flows)
    eng.step([6])
    # arrivals land after the schedule, so nothing moved this slot
    assert [eng.queue(n, 0) for n in range(3)] == [6, 0, 0]
    eng.step([0])
    assert [eng.queue(n, 0) for n in range(3)] == [0, 6, 0]


def test_config_errors():
    net, flows = chain()
    with pytest.raises(ValueError):
        TraditionalEngine(net, flows, tie_break="random")
    eng = TraditionalEngine(net, (FlowSpec(0, 0, 2, Elastic(), (0, 1, 2)),))
    with pytest.raises(NetworkError, match="inelastic"):
        eng.draw_arrivals(make_rng(0))
    eng = TraditionalEngine(net, flows)
    with pytest.raises(NetworkError):
        eng.set_queues({(2, 0): 1})
    with pytest.raises(ValueError):
        eng.set_queues({(0, 0): -1})


@given(st.integers(0, 2**32 - 1), st.integers(1, 60))
def test_conservation_and_nonnegativity(seed, slots):
    net = grid_network(3)
    flows = grid_flows(3, Inelastic(1.5))
    eng = TraditionalEngine(net, flows)
    rng = make_rng(seed)
    for _ in range(slots):
        eng.advance(rng)
        assert min(eng.q) >= 0
        for e in eng.table.dest_entry:
            assert eng.q[e] == 0
    for k, f in enumerate(eng.flows):
        assert eng.injected[k] == eng.flow_backlog(f.id) + eng.delivered[k]
    assert eng.total == sum(eng.q)
