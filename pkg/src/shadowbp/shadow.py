"""Shadow-queue back-pressure on fixed routes.

Per-flow shadow counters drive the max-weight schedule; real packets of
all flows share one FIFO per link and may only move when shadow packets
move on that link.  Sources are rate-controlled from their ingress shadow
counter (elastic) or fixed-rate (inelastic), with real traffic thinned by
``beta`` or shadow traffic inflated by ``epsilon``.
"""

from __future__ import annotations

from collections import deque

import numpy as np

from .network import AlphaFairUtility, Elastic, Inelastic, LogUtility, NetworkError
from .routes import RouteTable
from .scheduling import LinkWeights, MaxWeightScheduler
from .traffic import SourceParams

# FIFO batch layout: packets of one flow, same hop and creation slot, with
# consecutive per-link sequence numbers
FLOW, HOP, CREATED, COUNT, SEQ = range(5)


class ShadowEngine:
    kind = "shadow"

    def __init__(self, network, flows, params: SourceParams = SourceParams(),
                 tie_break="lowest", scheduler=None):
        if tie_break not in ("lowest", "highest"):
            raise ValueError("tie_break must be 'lowest' or 'highest'")
        self.network = network
        self.table = RouteTable(network, flows)
        self.flows = self.table.flows
        self.params = params
        self.scheduler = scheduler or MaxWeightScheduler(network)
        self.highest = tie_break == "highest"
        n_links = network.num_links
        n_flows = len(self.flows)
        self.q = [0] * self.table.size
        self.fifo = [deque() for _ in range(n_links)]
        self.fifo_len = [0] * n_links
        self._next_seq = [0] * n_links
        self._next_out = [0] * n_links
        # next FIFO after each hop of each flow, -1 at the last hop
        self._next_link = [links[1:] + [-1] for links in self.table.route_links]
        self.fifo_violations = 0
        self.shadow_total = 0
        self.real_total = 0
        self.slot = 0

        self.shadow_injected = [0] * n_flows
        self.injected = [0] * n_flows
        self.delivered = [0] * n_flows
        self.shadow_delivered = [0] * n_flows
        self.queued_by_flow = [0] * n_flows
        self.latency_sum = 0
        self.latency_count = 0
        self.rate_sum = [0.0] * n_flows
        self.served = {}
        self.real_served = [0] * n_links

        self._classify_sources()

    def _classify_sources(self):
        beta = self.params.beta
        elastic, thin, dup = [], [], []
        for k, f in enumerate(self.flows):
            t = f.traffic
            if isinstance(t, Elastic):
                elastic.append(k)
            elif isinstance(t, Inelastic) and t.epsilon > 0:
                if beta < 1:
                    raise NetworkError(
                        f"flow {f.id}: epsilon inflation and beta thinning are exclusive")
                dup.append(k)
            else:
                thin.append(k)
        self._elastic = elastic
        self._el_spec = []
        for k in elastic:
            t = self.flows[k].traffic
            if isinstance(t.utility, LogUtility):
                alpha = None
            elif isinstance(t.utility, AlphaFairUtility):
                alpha = t.utility.alpha
            else:
                raise NetworkError(f"flow {self.flows[k].id}: unsupported utility")
            self._el_spec.append((k, self.table.source_entry[k], alpha, float(t.x_max)))
        self._thin = thin
        self._dup = dup
        self._dup_rate = np.array([self.flows[k].traffic.rate for k in dup], dtype=float)
        self._dup_eps = np.array([self.flows[k].traffic.epsilon for k in dup], dtype=float)
        base = [0.0] * len(self.flows)
        for k in thin:
            base[k] = float(self.flows[k].traffic.rate)
        for k in dup:
            t = self.flows[k].traffic
            base[k] = t.rate * (1 + t.epsilon)
        self._base_rates = base
        self._driven = elastic + thin

    # -- arrivals ------------------------------------------------------------

    def source_rates(self):
        """Per-flow shadow injection rate for this slot."""
        rates = list(self._base_rates)
        if self._elastic:
            q = self.q
            M = self.params.M
            for k, e, alpha, x_max in self._el_spec:
                b = q[e]
                if b <= 0:
                    rates[k] = x_max
                    continue
                x = 1.0 / (b / M) if alpha is None else (b / M) ** (-1.0 / alpha)
                rates[k] = x if x < x_max else x_max
        return rates

    def draw_arrivals(self, rng):
        """Shadow and real counts per flow.

        Rate-driven flows (elastic and thinned inelastic) draw a Poisson
        shadow count and keep each shadow packet as a real packet with
        probability ``beta``; epsilon-inflated flows draw real packets and
        add a Binomial number of extra shadow packets.  Draw order per slot:
        rate-driven Poisson vector, its Binomial thinning vector (skipped
        when ``beta == 1``), then the inflated flows' Poisson and Binomial
        vectors, each vector in flow order.
        """
        n = len(self.flows)
        shadow = [0] * n
        real = [0] * n
        rates = self.source_rates()
        driven = self._driven
        if driven:
            s = rng.poisson([rates[k] for k in driven])
            beta = self.params.beta
            r = rng.binomial(s, beta) if beta < 1 else s
            for k, a, b in zip(driven, s.tolist(), r.tolist()):
                shadow[k] = a
                real[k] = b
        if self._dup:
            r = rng.poisson(self._dup_rate)
            extra = rng.binomial(r, self._dup_eps)
            for k, a, b in zip(self._dup, (r + extra).tolist(), r.tolist()):
                shadow[k] = a
                real[k] = b
        return shadow, real, rates

    def advance(self, rng):
        shadow, real, rates = self.draw_arrivals(rng)
        return self.step(shadow, real, rates)

    # -- dynamics ------------------------------------------------------------

    def weights(self) -> LinkWeights:
        w, arg = self.table.differential_weights(self.q, self.highest)
        ids = tuple(None if k is None else self.flows[k].id for k in arg)
        return LinkWeights(tuple(w), ids)

    def _enqueue(self, l, k, hop, created, count):
        fifo = self.fifo[l]
        seq = self._next_seq[l]
        if fifo:
            last = fifo[-1]
            if last[FLOW] == k and last[HOP] == hop and last[CREATED] == created:
                last[COUNT] += count
                self._next_seq[l] = seq + count
                self.fifo_len[l] += count
                return
        fifo.append([k, hop, created, count, seq])
        self._next_seq[l] = seq + count
        self.fifo_len[l] += count

    def step(self, shadow_arrivals, real_arrivals, rates=None):
        """One slot.

        Real arrivals join the first-hop FIFO, the schedule is computed from
        beginning-of-slot shadow counters, shadow packets move, each active
        link releases up to as many real packets as shadow packets it moved,
        and finally shadow arrivals join the ingress counters.
        """
        t = self.slot
        table = self.table
        q = self.q
        route_links = table.route_links

        injected = 0
        for k, a in enumerate(real_arrivals):
            if a:
                self._enqueue(route_links[k][0], k, 0, t, a)
                self.injected[k] += a
                self.queued_by_flow[k] += a
                injected += a
        if rates is not None:
            rs = self.rate_sum
            for k, x in enumerate(rates):
                rs[k] += x

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
            moves.append((l, k, a, b, s))
        shadow_delivered = 0
        served = self.served
        for l, k, a, b, s in moves:
            if not s:
                continue
            q[a] -= s
            key = (l, self.flows[k].id)
            served[key] = served.get(key, 0) + s
            if is_dest[b]:
                self.shadow_delivered[k] += s
                shadow_delivered += s
            else:
                q[b] += s

        # real service against beginning-of-service FIFO contents; packets
        # forwarded this slot join their next FIFO afterwards, in ascending
        # sending-link order
        fifos = self.fifo
        flen = self.fifo_len
        next_out = self._next_out
        next_link = self._next_link
        real_served = self.real_served
        forwards = []
        delivered = 0
        for l, k, a, b, s in moves:
            n = flen[l]
            if not s or not n:
                continue
            r = s if s < n else n
            flen[l] = n - r
            real_served[l] += r
            fifo = fifos[l]
            left = r
            expect = next_out[l]
            while left:
                batch = fifo[0]
                fk, hop, created, c, seq = batch
                if seq != expect:
                    self.fifo_violations += 1
                if c <= left:
                    fifo.popleft()
                    take = c
                else:
                    take = left
                    batch[COUNT] = c - take
                    batch[SEQ] = seq + take
                expect = seq + take
                left -= take
                nl = next_link[fk][hop]
                if nl < 0:
                    self.delivered[fk] += take
                    self.queued_by_flow[fk] -= take
                    self.latency_sum += (t - created) * take
                    self.latency_count += take
                    delivered += take
                else:
                    forwards.append((nl, fk, hop + 1, created, take))
            next_out[l] = expect
        next_seq = self._next_seq
        for nl, fk, hop, created, take in forwards:
            fifo = fifos[nl]
            seq = next_seq[nl]
            next_seq[nl] = seq + take
            flen[nl] += take
            if fifo:
                last = fifo[-1]
                if last[FLOW] == fk and last[HOP] == hop and last[CREATED] == created:
                    last[COUNT] += take
                    continue
            fifo.append([fk, hop, created, take, seq])

        shadow_in = 0
        src = table.source_entry
        for k, a in enumerate(shadow_arrivals):
            if a:
                q[src[k]] += a
                self.shadow_injected[k] += a
                shadow_in += a
        self.shadow_total += shadow_in - shadow_delivered
        self.real_total += injected - delivered
        self.slot += 1
        return moves

    # -- inspection ----------------------------------------------------------

    def _pos(self, flow_id):
        for k, f in enumerate(self.flows):
            if f.id == flow_id:
                return k
        raise KeyError(flow_id)

    def counter(self, node, flow_id):
        e = self.table.entry(node, self._pos(flow_id))
        return 0 if e is None else self.q[e]

    def set_counters(self, values):
        for (node, fid), v in values.items():
            e = self.table.entry(node, self._pos(fid))
            if e is None or self.table.is_dest[e]:
                raise NetworkError(f"no shadow counter for flow {fid} at node {node}")
            self.q[e] = int(v)
        self.shadow_total = sum(self.q)

    def load_fifo(self, link, flow_id, count, created=0):
        """Place ``count`` real packets of ``flow_id`` in ``link``'s FIFO."""
        k = self._pos(flow_id)
        try:
            hop = self.table.route_links[k].index(link)
        except ValueError:
            raise NetworkError(f"flow {flow_id} does not use link {link}") from None
        self._enqueue(link, k, hop, created, count)
        self.injected[k] += count
        self.queued_by_flow[k] += count
        self.real_total += count

    def fifo_contents(self, link):
        """Flow ids of queued packets on ``link`` in service order."""
        out = []
        for batch in self.fifo[link]:
            out.extend([self.flows[batch[FLOW]].id] * batch[COUNT])
        return out


def shadow_weights(counters, network, flows) -> LinkWeights:
    """Link weights from shadow counters ``{(node, flow_id): count}``."""
    eng = ShadowEngine(network, flows)
    eng.set_counters(counters)
    return eng.weights()


def shadow_equivalence_check(counters_trace, traditional_trace) -> bool:
    """True iff two per-slot queue-state traces are identical."""
    if len(counters_trace) != len(traditional_trace):
        raise ValueError("trace lengths differ")
    return all(list(a) == list(b) for a, b in zip(counters_trace, traditional_trace))
