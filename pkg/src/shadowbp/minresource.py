"""Adaptive routing by back-pressure with a per-hop penalty ``M``.

Queues are kept per destination; a link's weight is the largest
per-destination differential backlog minus ``M``, so a packet only takes
a hop when the backlog gradient pays for it.  ``M = 0`` is plain
back-pressure routing.
"""

from __future__ import annotations

import numpy as np

from .network import FlowSpec, Inelastic, NetworkError
from .scheduling import LinkWeights, MaxWeightScheduler


def _exact(M):
    if isinstance(M, float) and M.is_integer():
        return int(M)
    return M


class MinResourceEngine:
    kind = "minresource"

    def __init__(self, network, flows, M=0, scheduler=None):
        if M < 0:
            raise ValueError("M must be nonnegative")
        self.network = network
        self.flows = list(flows)
        for f in self.flows:
            if not isinstance(f.traffic, Inelastic):
                raise NetworkError(f"flow {f.id}: min-resource routing supports inelastic flows only")
        self.M = _exact(M)
        self.scheduler = scheduler or MaxWeightScheduler(network)
        self.dests = sorted({f.destination for f in self.flows})
        self._d_index = {d: i for i, d in enumerate(self.dests)}
        D = len(self.dests)
        self.D = D
        self.q = [0] * (network.num_nodes * D)
        self._tails = [link.tail * D for link in network.links]
        self._heads = [link.head * D for link in network.links]
        self._sink = [link.head for link in network.links]
        self._src = [f.source * D + self._d_index[f.destination] for f in self.flows]
        self._rates = np.array([f.traffic.rate for f in self.flows], dtype=float)
        self.injected = [0] * len(self.flows)
        self.delivered = [0] * D
        self.served = {}
        self.total = 0
        self.slot = 0

    def draw_arrivals(self, rng):
        return rng.poisson(self._rates).tolist()

    def advance(self, rng):
        return self.step(self.draw_arrivals(rng))

    def _weights(self):
        q = self.q
        M = self.M
        D = self.D
        weights = []
        argmax = []
        for t, h in zip(self._tails, self._heads):
            best = None
            arg = 0
            for d in range(D):
                v = q[t + d] - q[h + d]
                if best is None or v > best:
                    best = v
                    arg = d
            weights.append(best - M)
            argmax.append(arg)
        return weights, argmax

    def weights(self) -> LinkWeights:
        w, arg = self._weights()
        return LinkWeights(tuple(w), tuple(self.dests[d] for d in arg))

    def step(self, arrivals):
        q = self.q
        w, arg = self._weights()
        active = self.scheduler.active_links(w)
        caps = self.scheduler.caps
        moves = []
        for l in active:
            d = arg[l]
            a = self._tails[l] + d
            s = min(caps[l], q[a])
            if s:
                moves.append((l, d, a, s))
        delivered = 0
        served = self.served
        dests = self.dests
        for l, d, a, s in moves:
            q[a] -= s
            key = (l, dests[d])
            served[key] = served.get(key, 0) + s
            if self._sink[l] == dests[d]:
                self.delivered[d] += s
                delivered += s
            else:
                q[self._heads[l] + d] += s
        injected = 0
        for k, a in enumerate(arrivals):
            if a:
                q[self._src[k]] += a
                self.injected[k] += a
                injected += a
        self.total += injected - delivered
        self.slot += 1
        return moves

    def queue(self, node, dest):
        return self.q[node * self.D + self._d_index[dest]]

    def set_queues(self, values):
        for (node, dest), v in values.items():
            if node == dest:
                raise NetworkError("a destination holds no queue for itself")
            self.q[node * self.D + self._d_index[dest]] = int(v)
        self.total = sum(self.q)

    def entries(self):
        """Yield ``(node, destination, flat index)`` for every queue."""
        for node in range(self.network.num_nodes):
            for i, d in enumerate(self.dests):
                if node != d:
                    yield node, d, node * self.D + i


def minresource_weights(queues, network, dests, M) -> LinkWeights:
    """Penalised link weights for per-destination queues
    ``{(node, dest): count}``; ``dests`` lists every destination."""
    dummy = []
    for i, d in enumerate(sorted(dests)):
        src = 0 if d != 0 else 1
        dummy.append(FlowSpec(i, src, d, Inelastic(1.0)))
    eng = MinResourceEngine(network, dummy, M=M)
    eng.set_queues(queues)
    return eng.weights()


def link_rate_allocation(served, slots, network=None):
    """Time-averaged service rate per ``(link, destination)``.

    With ``network`` given, keys are ``(tail, head, destination)``.
    """
    if slots <= 0:
        raise ValueError("slot count must be positive")
    out = {}
    for (l, d), n in served.items():
        key = (l, d) if network is None else (network.links[l].tail, network.links[l].head, d)
        out[key] = n / slots
    return out
