"""Per-slot max-weight scheduling over the valid schedule set.

A link's rate enters the objective multiplied by its weight and every link
has a fixed capacity, so an optimal schedule serves each active link at
full capacity.  Under node-exclusive interference the active set is an
exact maximum-weight matching with link weight ``capacity * w``.

Ties between schedules with equal objective are broken toward the
lexicographically smallest set of active link indices.  This is done
exactly by scaling the (rational) objective to integers and adding a
distinct power-of-two bonus per link, which makes the maximiser unique.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm

import networkx as nx

from .network import NODE_EXCLUSIVE, Network, Schedule, is_valid_schedule

BRUTE_FORCE_MAX_LINKS = 24
# profile DP cost grows as 2**bandwidth; beyond this use blossom
DP_MAX_BANDWIDTH = 12


@dataclass(frozen=True)
class LinkWeights:
    """Per-link weight (``None`` = carried by no flow) and the argmax index."""

    weights: tuple
    argmax: tuple

    def __post_init__(self):
        if len(self.weights) != len(self.argmax):
            raise ValueError("weights and argmax lengths differ")


def _as_exact(w):
    if isinstance(w, int):
        return w
    if isinstance(w, float) and w.is_integer():
        return int(w)
    return Fraction(w)


def _node_order(network):
    """Node ordering with small bandwidth for the profile DP."""
    identity = list(range(network.num_nodes))
    g = nx.Graph()
    g.add_nodes_from(identity)
    g.add_edges_from(link.nodes for link in network.links)

    def bandwidth(order):
        pos = {n: i for i, n in enumerate(order)}
        return max((abs(pos[u] - pos[v]) for u, v in g.edges), default=0)

    best = identity
    try:
        rcm = list(nx.utils.reverse_cuthill_mckee_ordering(g))
        if len(rcm) == len(identity) and bandwidth(rcm) < bandwidth(identity):
            best = rcm
    except nx.NetworkXException:
        pass
    return best


class MaxWeightScheduler:
    """Exact max-weight scheduler bound to one network.

    Node-exclusive instances are solved by a dynamic program over a
    low-bandwidth node ordering (exact, fast on the lattice and small
    topologies) with networkx's blossom matching as the general fallback.
    """

    def __init__(self, network: Network):
        self.network = network
        self.caps = network.capacities
        self.node_exclusive = network.interference == NODE_EXCLUSIVE
        n_links = network.num_links
        self._bonus = [1 << (n_links - 1 - i) for i in range(n_links)]
        self._shift = n_links
        if self.node_exclusive:
            order = _node_order(network)
            self._pos = [0] * network.num_nodes
            for i, node in enumerate(order):
                self._pos[node] = i

    def active_links(self, weights) -> list:
        """Indices of links served at capacity, ascending."""
        cand = [i for i, w in enumerate(weights) if w is not None and w > 0]
        if not self.node_exclusive or len(cand) <= 1:
            return cand
        caps = self.caps
        exact = [_as_exact(caps[i] * weights[i]) for i in cand]
        den = 1
        for v in exact:
            if isinstance(v, Fraction):
                den = lcm(den, v.denominator)
        shift, bonus = self._shift, self._bonus
        # per node pair keep only the better orientation; both share endpoints
        best = {}
        links = self.network.links
        for i, v in zip(cand, exact):
            pw = (int(v * den) << shift) + bonus[i]
            u, h = links[i].tail, links[i].head
            key = (u, h) if u < h else (h, u)
            prev = best.get(key)
            if prev is None or pw > prev[0]:
                best[key] = (pw, i)
        pos = self._pos
        bw = max(abs(pos[u] - pos[v]) for u, v in best)
        if bw <= DP_MAX_BANDWIDTH:
            chosen = self._profile_dp(best)
        else:
            chosen = self._blossom(best)
        return sorted(chosen)

    def _profile_dp(self, best):
        pos = self._pos
        adj = [[] for _ in range(self.network.num_nodes)]
        for (u, v), (pw, i) in best.items():
            pu, pv = pos[u], pos[v]
            if pu > pv:
                pu, pv = pv, pu
            adj[pu].append((pv - pu, pw, i))
        states = {0: (0, None)}
        for p in range(len(adj)):
            new = {}
            edges = adj[p]
            for mask, (val, chain) in states.items():
                nm = mask >> 1
                cur = new.get(nm)
                if cur is None or val > cur[0]:
                    new[nm] = (val, chain)
                if mask & 1:
                    continue
                for d, pw, i in edges:
                    if (mask >> d) & 1:
                        continue
                    nm = (mask | (1 << d)) >> 1
                    nv = val + pw
                    cur = new.get(nm)
                    if cur is None or nv > cur[0]:
                        new[nm] = (nv, (i, chain))
            states = new
        _, chain = states[0]
        chosen = []
        while chain is not None:
            chosen.append(chain[0])
            chain = chain[1]
        return chosen

    def _blossom(self, best):
        g = nx.Graph()
        for (u, v), (pw, i) in best.items():
            g.add_edge(u, v, weight=pw, link=i)
        matching = nx.max_weight_matching(g, maxcardinality=False)
        return [g.edges[u, v]["link"] for u, v in matching]

    def schedule(self, weights: LinkWeights) -> Schedule:
        active = self.active_links(weights.weights)
        rates = [0] * self.network.num_links
        selected = [None] * self.network.num_links
        for i in active:
            rates[i] = self.caps[i]
            selected[i] = weights.argmax[i]
        return Schedule(tuple(rates), tuple(selected))


def max_weight_schedule(network: Network, weights) -> Schedule:
    """Schedule maximising ``sum(rate * w)`` over the valid schedules."""
    if not isinstance(weights, LinkWeights):
        weights = LinkWeights(tuple(weights), (None,) * len(weights))
    if len(weights.weights) != network.num_links:
        raise ValueError("weights must cover every link")
    return MaxWeightScheduler(network).schedule(weights)


def brute_force_max_weight(network: Network, weights) -> Schedule:
    """Exhaustive oracle for :func:`max_weight_schedule` on small networks.

    Walks every subset of links (pruned through the zeroing property: a
    subset of a valid schedule is valid) at full capacity and keeps the best
    by objective, then fewest non-positive links, then smallest index set.
    """
    if not isinstance(weights, LinkWeights):
        weights = LinkWeights(tuple(weights), (None,) * len(weights))
    w = weights.weights
    n = network.num_links
    if n > BRUTE_FORCE_MAX_LINKS:
        raise ValueError(f"brute force limited to {BRUTE_FORCE_MAX_LINKS} links, got {n}")
    caps = network.capacities
    value = [None if x is None else Fraction(x) * caps[i] for i, x in enumerate(w)]
    best = [Fraction(0), 0, ()]
    rates = [0] * n

    def visit(i, chosen, obj, nonpos):
        if i == n:
            key_better = (obj > best[0]
                          or (obj == best[0] and nonpos < best[1])
                          or (obj == best[0] and nonpos == best[1] and tuple(chosen) < best[2]))
            if key_better:
                best[:] = [obj, nonpos, tuple(chosen)]
            return
        visit(i + 1, chosen, obj, nonpos)
        if value[i] is None:
            return
        rates[i] = caps[i]
        if is_valid_schedule(network, rates):
            chosen.append(i)
            visit(i + 1, chosen, obj + value[i], nonpos + (value[i] <= 0))
            chosen.pop()
        rates[i] = 0

    visit(0, [], Fraction(0), 0)
    out = [0] * n
    selected = [None] * n
    for i in best[2]:
        out[i] = caps[i]
        selected[i] = weights.argmax[i]
    return Schedule(tuple(out), tuple(selected))
