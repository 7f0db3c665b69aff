"""Flat queue layout shared by the fixed-route engines.

Each flow owns a contiguous block of entries, one per node on its route,
so per-(node, flow) state is a single Python list.  The last entry of each
block is the destination and stays at zero.
"""

from __future__ import annotations

from .network import Network, NetworkError, validate_route


class RouteTable:
    def __init__(self, network: Network, flows):
        self.network = network
        self.flows = list(flows)
        ids = [f.id for f in self.flows]
        if ids != sorted(set(ids)):
            raise NetworkError("flow ids must be unique and listed in ascending order")
        self.route_links = [validate_route(network, f) for f in self.flows]
        self.offset = []
        size = 0
        for f in self.flows:
            self.offset.append(size)
            size += len(f.route)
        self.size = size
        # carriers[l] = [(flow position, tail entry, head entry)] by ascending flow id
        self.carriers = [[] for _ in network.links]
        for k, links in enumerate(self.route_links):
            base = self.offset[k]
            for hop, l in enumerate(links):
                self.carriers[l].append((k, base + hop, base + hop + 1))
        self.dest_entry = [self.offset[k] + len(f.route) - 1 for k, f in enumerate(self.flows)]
        self.is_dest = [False] * size
        for e in self.dest_entry:
            self.is_dest[e] = True
        self.source_entry = list(self.offset)
        self.k_max = max(len(r) for r in self.route_links) if self.route_links else 0

    def entry(self, node, k):
        """Flat index of (node, flow at position ``k``) or ``None`` off-route."""
        route = self.flows[k].route
        try:
            return self.offset[k] + route.index(node)
        except ValueError:
            return None

    def entries(self):
        """Yield ``(node, flow_id, flat index)`` for every entry."""
        for k, f in enumerate(self.flows):
            for hop, node in enumerate(f.route):
                yield node, f.id, self.offset[k] + hop

    def differential_weights(self, q, highest=False):
        """Max per-flow differential backlog per link and the winning flow's
        position in :attr:`flows`.

        Links carried by no flow get weight ``None``.  Ties go to the lowest
        flow id unless ``highest`` is set.
        """
        weights = []
        argmax = []
        for car in self.carriers:
            best = None
            arg = None
            for k, a, b in car:
                d = q[a] - q[b]
                if best is None or d > best or (highest and d == best):
                    best = d
                    arg = k
            weights.append(best)
            argmax.append(arg)
        return weights, argmax
