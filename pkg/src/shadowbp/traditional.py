"""Traditional back-pressure with per-flow queues on fixed routes."""

from __future__ import annotations

import numpy as np

from .network import Inelastic, NetworkError
from .routes import RouteTable
from .scheduling import LinkWeights, MaxWeightScheduler


class TraditionalEngine:
    """Per-flow physical queues at every route node.

    Queue updates read beginning-of-slot values for every transfer, so a
    packet moves at most one hop per slot, then external arrivals join the
    source queues.
    """

    kind = "traditional"

    def __init__(self, network, flows, tie_break="lowest", scheduler=None):
        if tie_break not in ("lowest", "highest"):
            raise ValueError("tie_break must be 'lowest' or 'highest'")
        self.network = network
        self.table = RouteTable(network, flows)
        self.flows = self.table.flows
        self.scheduler = scheduler or MaxWeightScheduler(network)
        self.highest = tie_break == "highest"
        self.q = [0] * self.table.size
        self.total = 0
        n_flows = len(self.flows)
        self.injected = [0] * n_flows
        self.delivered = [0] * n_flows
        self.served = {}
        self.slot = 0
        self._rates = None

    # -- arrivals ------------------------------------------------------------

    def _arrival_means(self):
        if self._rates is None:
            rates = []
            for f in self.flows:
                if not isinstance(f.traffic, Inelastic):
                    raise NetworkError(
                        f"flow {f.id}: traditional engine draws arrivals for inelastic flows only")
                rates.append(f.traffic.rate)
            self._rates = np.array(rates, dtype=float)
        return self._rates

    def draw_arrivals(self, rng):
        return rng.poisson(self._arrival_means()).tolist()

    def advance(self, rng):
        return self.step(self.draw_arrivals(rng))

    # -- dynamics ------------------------------------------------------------

    def weights(self) -> LinkWeights:
        w, arg = self.table.differential_weights(self.q, self.highest)
        ids = tuple(None if k is None else self.flows[k].id for k in arg)
        return LinkWeights(tuple(w), ids)

    def step(self, arrivals):
        """One slot: schedule, transfer, then add ``arrivals`` (per flow)."""
        table = self.table
        q = self.q
        w, arg = table.differential_weights(q, self.highest)
        active = self.scheduler.active_links(w)
        caps = self.scheduler.caps
        carriers = table.carriers
        is_dest = table.is_dest
        moves = []
        for l in active:
            k = arg[l]
            for kk, a, b in carriers[l]:
                if kk == k:
                    break
            s = min(caps[l], q[a])
            if s:
                moves.append((l, k, a, b, s))
        delivered = 0
        served = self.served
        for l, k, a, b, s in moves:
            q[a] -= s
            key = (l, self.flows[k].id)
            served[key] = served.get(key, 0) + s
            if is_dest[b]:
                self.delivered[k] += s
                delivered += s
            else:
                q[b] += s
        injected = 0
        src = table.source_entry
        for k, a in enumerate(arrivals):
            if a:
                q[src[k]] += a
                self.injected[k] += a
                injected += a
        self.total += injected - delivered
        self.slot += 1
        return moves

    def queue(self, node, flow_id):
        k = self._pos(flow_id)
        e = self.table.entry(node, k)
        return 0 if e is None else self.q[e]

    def _pos(self, flow_id):
        for k, f in enumerate(self.flows):
            if f.id == flow_id:
                return k
        raise KeyError(flow_id)

    def flow_backlog(self, flow_id):
        k = self._pos(flow_id)
        a = self.table.offset[k]
        return sum(self.q[a:a + len(self.flows[k].route)])

    def set_queues(self, values):
        """Overwrite queue contents from ``{(node, flow_id): count}``."""
        for (node, fid), v in values.items():
            e = self.table.entry(node, self._pos(fid))
            if e is None or self.table.is_dest[e]:
                raise NetworkError(f"no queue for flow {fid} at node {node}")
            if v < 0:
                raise ValueError("queue lengths are nonnegative")
            self.q[e] = int(v)
        self.total = sum(self.q)


def traditional_weights(queues, network, flows) -> LinkWeights:
    """Differential-backlog link weights for per-flow queues
    ``{(node, flow_id): count}``."""
    eng = TraditionalEngine(network, flows)
    eng.set_queues(queues)
    return eng.weights()
