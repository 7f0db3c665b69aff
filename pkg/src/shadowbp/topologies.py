"""Built-in topologies and flow sets: the linear chain, the 4x4 lattice and
the eight-node two-flow network."""

from __future__ import annotations

from .network import (NO_INTERFERENCE, NODE_EXCLUSIVE, Elastic, FlowSpec,
                      Inelastic, Link, LogUtility, Network)

DIAMOND_EDGES = ((0, 1), (1, 2), (0, 3), (1, 6), (2, 4),
                 (3, 4), (3, 5), (4, 7), (5, 6), (6, 7))


def linear_network(N, capacity=10, c_max=None):
    """Chain ``0 -> 1 -> ... -> N`` with ``N`` links and no interference."""
    links = tuple(Link(i, i + 1, capacity) for i in range(N))
    return Network(N + 1, links, NO_INTERFERENCE, c_max or max(10, capacity))


def linear_flows(N, long_traffic, short_traffic):
    """Flow 0 crosses every link; flow ``i`` uses link ``i`` only
    (nodes ``i-1 -> i``)."""
    flows = [FlowSpec(0, 0, N, long_traffic, tuple(range(N + 1)))]
    for i in range(1, N + 1):
        flows.append(FlowSpec(i, i - 1, i, short_traffic, (i - 1, i)))
    return tuple(flows)


def grid_network(side=4, capacity=10, bidirectional=True):
    """``side x side`` lattice with one-hop (node-exclusive) interference.

    Node ``(r, c)`` has id ``r * side + c``.  Each lattice edge becomes a
    link in both directions unless ``bidirectional`` is off.
    """
    edges = []
    for r in range(side):
        for c in range(side):
            n = r * side + c
            if c + 1 < side:
                edges.append((n, n + 1))
            if r + 1 < side:
                edges.append((n, n + side))
    links = []
    for u, v in edges:
        links.append(Link(u, v, capacity))
        if bidirectional:
            links.append(Link(v, u, capacity))
    return Network(side * side, tuple(links), NODE_EXCLUSIVE, max(10, capacity))


def grid_flows(side=4, traffic=None):
    """Straight-line flows on the lattice.

    For every row, flows run from the first node of the row to each other
    node in it; likewise down every column; each pair is used in both
    directions.  On the 4x4 lattice this gives 12 row pairs, 12 column
    pairs and 48 flows with routes of 1 to 3 hops.
    """
    traffic = traffic or Elastic(LogUtility())
    routes = []
    for r in range(side):
        row = [r * side + c for c in range(side)]
        for j in range(1, side):
            routes.append(tuple(row[:j + 1]))
    for c in range(side):
        col = [r * side + c for r in range(side)]
        for j in range(1, side):
            routes.append(tuple(col[:j + 1]))
    flows = []
    for route in routes:
        for path in (route, tuple(reversed(route))):
            flows.append(FlowSpec(len(flows), path[0], path[-1], traffic, path))
    return tuple(flows)


def diamond_network(capacity=10):
    """Eight nodes, ten bidirectional edges, node-exclusive interference."""
    links = []
    for u, v in DIAMOND_EDGES:
        links.append(Link(u, v, capacity))
        links.append(Link(v, u, capacity))
    return Network(8, tuple(links), NODE_EXCLUSIVE, max(10, capacity))


def diamond_flows(lam=5.0):
    """Flow 0 from node 3 to node 4, flow 1 from node 1 to node 6; no fixed
    routes."""
    return (FlowSpec(0, 3, 4, Inelastic(lam)),
            FlowSpec(1, 1, 6, Inelastic(lam)))


def undirected_allocation(network, allocation):
    """Fold ``{(link, key): rate}`` onto undirected edges ``(min, max)``."""
    out = {}
    for (l, key), rate in allocation.items():
        link = network.links[l]
        edge = (min(link.tail, link.head), max(link.tail, link.head))
        out[(edge, key)] = out.get((edge, key), 0.0) + rate
    return out
