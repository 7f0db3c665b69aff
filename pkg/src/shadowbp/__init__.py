"""Slotted-time simulator of back-pressure scheduling with shadow queues and
min-resource routing."""

from .harness import ConfigError, MetricsLog, Scenario, run
from .network import (NODE_EXCLUSIVE, NO_INTERFERENCE, AlphaFairUtility, Elastic,
                      FlowSpec, Inelastic, Link, LogUtility, Network, NetworkError,
                      Schedule, build_network, is_valid_schedule, validate_route)
from .scheduling import LinkWeights, brute_force_max_weight, max_weight_schedule

__all__ = [
    "AlphaFairUtility", "ConfigError", "Elastic", "FlowSpec", "Inelastic", "Link",
    "LinkWeights", "LogUtility", "MetricsLog", "NODE_EXCLUSIVE", "NO_INTERFERENCE",
    "Network", "NetworkError", "Scenario", "Schedule", "brute_force_max_weight",
    "build_network", "is_valid_schedule", "max_weight_schedule", "run", "validate_route",
]
