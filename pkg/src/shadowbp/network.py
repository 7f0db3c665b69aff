"""Network graph, flows, traffic models and schedule validity.

Nodes are dense integers ``0..N-1`` and links are directed ``(tail, head)``
pairs with an integer capacity in packets per slot.  Everything here is
immutable once built so a single network can back many simulation runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

NO_INTERFERENCE = "none"
NODE_EXCLUSIVE = "node_exclusive"
INTERFERENCE_MODELS = (NO_INTERFERENCE, NODE_EXCLUSIVE)

DEFAULT_C_MAX = 10


class NetworkError(ValueError):
    """Raised when a network, flow or route violates its invariants."""


@dataclass(frozen=True)
class Link:
    tail: int
    head: int
    capacity: int

    @property
    def nodes(self):
        return (self.tail, self.head)


@dataclass(frozen=True)
class Network:
    num_nodes: int
    links: tuple
    interference: str = NO_INTERFERENCE
    c_max: int = DEFAULT_C_MAX
    _index: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.interference not in INTERFERENCE_MODELS:
            raise NetworkError(f"unknown interference model {self.interference!r}")
        if self.num_nodes < 1:
            raise NetworkError("network needs at least one node")
        index = {}
        for i, link in enumerate(self.links):
            if link.tail == link.head:
                raise NetworkError(f"link {i} ({link.tail}->{link.head}): self-loop")
            for node in link.nodes:
                if not 0 <= node < self.num_nodes:
                    raise NetworkError(
                        f"link {i} ({link.tail}->{link.head}): dangling endpoint {node}")
            if not 1 <= link.capacity <= self.c_max:
                raise NetworkError(
                    f"link {i} ({link.tail}->{link.head}): capacity {link.capacity} "
                    f"outside [1, {self.c_max}]")
            if (link.tail, link.head) in index:
                raise NetworkError(f"link {i} ({link.tail}->{link.head}): duplicate link")
            index[(link.tail, link.head)] = i
        object.__setattr__(self, "_index", index)

    @property
    def nodes(self):
        return range(self.num_nodes)

    @property
    def num_links(self):
        return len(self.links)

    @property
    def capacities(self):
        return [link.capacity for link in self.links]

    def link_index(self, tail, head):
        """Index of link ``tail -> head`` or ``None`` if absent."""
        return self._index.get((tail, head))


def build_network(spec) -> Network:
    """Build a validated :class:`Network` from a plain description.

    ``spec`` is a mapping with ``nodes`` (a count or a list of dense ids),
    ``links`` (``[tail, head, capacity]`` triples or mappings with those
    keys), optional ``interference`` and optional ``c_max``.
    """
    nodes = spec["nodes"]
    if isinstance(nodes, int):
        num_nodes = nodes
    else:
        nodes = list(nodes)
        if sorted(nodes) != list(range(len(nodes))):
            raise NetworkError("node ids must be the dense integers 0..N-1")
        num_nodes = len(nodes)
    links = []
    for entry in spec["links"]:
        if isinstance(entry, dict):
            tail, head, cap = entry["tail"], entry["head"], entry["capacity"]
        else:
            tail, head, cap = entry
        links.append(Link(int(tail), int(head), int(cap)))
    return Network(
        num_nodes=num_nodes,
        links=tuple(links),
        interference=spec.get("interference", NO_INTERFERENCE) or NO_INTERFERENCE,
        c_max=int(spec.get("c_max", DEFAULT_C_MAX)),
    )


# -- traffic -----------------------------------------------------------------

@dataclass(frozen=True)
class LogUtility:
    def inverse_marginal(self, y):
        return 1.0 / y


@dataclass(frozen=True)
class AlphaFairUtility:
    alpha: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise NetworkError("alpha-fair utility needs alpha > 0")

    def inverse_marginal(self, y):
        return y ** (-1.0 / self.alpha)


UtilityKind = Union[LogUtility, AlphaFairUtility]


@dataclass(frozen=True)
class Elastic:
    utility: UtilityKind = LogUtility()
    x_max: float = 2 * DEFAULT_C_MAX

    def __post_init__(self):
        if not self.x_max > 0:
            raise NetworkError("elastic traffic needs x_max > 0")


@dataclass(frozen=True)
class Inelastic:
    rate: float
    epsilon: float = 0.0

    def __post_init__(self):
        if not self.rate > 0:
            raise NetworkError("inelastic traffic needs lambda > 0")
        if not 0 <= self.epsilon <= 1:
            raise NetworkError("epsilon must lie in [0, 1]")


TrafficModel = Union[Elastic, Inelastic]


@dataclass(frozen=True)
class FlowSpec:
    id: int
    source: int
    destination: int
    traffic: TrafficModel
    route: Optional[tuple] = None

    def __post_init__(self):
        if self.source == self.destination:
            raise NetworkError(f"flow {self.id}: source equals destination")
        if self.route is not None:
            object.__setattr__(self, "route", tuple(int(n) for n in self.route))


def validate_route(network: Network, flow: FlowSpec) -> list:
    """Return the ordered link indices of ``flow``'s fixed route."""
    route = flow.route
    if route is None:
        raise NetworkError(f"flow {flow.id}: no fixed route")
    if len(route) < 2 or route[0] != flow.source or route[-1] != flow.destination:
        raise NetworkError(f"flow {flow.id}: route must run from source to destination")
    if len(set(route)) != len(route):
        raise NetworkError(f"flow {flow.id}: route repeats a node")
    links = []
    for tail, head in zip(route, route[1:]):
        idx = network.link_index(tail, head)
        if idx is None:
            raise NetworkError(f"flow {flow.id}: no link {tail}->{head} on route")
        links.append(idx)
    return links


def max_route_length(network: Network, flows: Sequence[FlowSpec]) -> int:
    """K_max: the longest fixed route in hops."""
    return max(len(validate_route(network, f)) for f in flows)


# -- schedules ---------------------------------------------------------------

@dataclass(frozen=True)
class Schedule:
    """Per-link service amounts plus the flow/destination that won each link."""

    rates: tuple
    selected: tuple = None

    @property
    def active(self):
        return tuple(i for i, r in enumerate(self.rates) if r > 0)

    def objective(self, weights):
        return sum(r * w for r, w in zip(self.rates, weights) if r > 0)


def is_valid_schedule(network: Network, schedule) -> bool:
    rates = schedule.rates if isinstance(schedule, Schedule) else schedule
    if len(rates) != network.num_links:
        return False
    used = set()
    for link, rate in zip(network.links, rates):
        if rate < 0 or rate > link.capacity or int(rate) != rate:
            return False
        if rate == 0 or network.interference == NO_INTERFERENCE:
            continue
        if link.tail in used or link.head in used:
            return False
        used.update(link.nodes)
    return True
