"""Resilient-consensus simulation toolkit.

Agents repeatedly average their neighbors' values after discarding extremes
(the MSR family of update rules) while malicious nodes, possibly hopping
between hosts from round to round, try to break agreement.  The package
provides the graph machinery (random geometric networks, robustness checks),
the protocol rules, the adversary scheduler, a synchronous round engine, and
a batch experiment harness with a command-line front end.
"""

from __future__ import annotations

from .adversary import (
    AdversaryConfig,
    AdversaryModel,
    AlternatingExtremes,
    Constant,
    PeriodicCycle,
    Stationary,
    UniformRandom,
    UniformRange,
)
from .engine import (
    RoundTrace,
    SimulationConfig,
    SimulationResult,
    Verdict,
    contraction_certificate,
    run_simulation,
    spread,
)
from .graph import (
    ConditionReport,
    ConditionStatus,
    EnumerationLimitError,
    GeometricSpec,
    Graph,
    check_c2_prime,
    check_protocol_conditions,
    generate_complete,
    generate_geometric,
    geometric_from_positions,
    is_r_s_robust,
    max_robustness,
    max_s_for_r,
    read_graph,
    sample_positions,
    sufficient_by_degree,
    write_graph,
)
from .protocol import (
    AgentState,
    Protocol,
    TrimResult,
    WeightAssignment,
    advance_cured_flag,
    assign_weights,
    should_send,
    trim,
    trimmed_mean,
    update_value,
    valid_thetas,
)

__version__ = "0.1.0"

__all__ = [
    "AdversaryConfig",
    "AdversaryModel",
    "AgentState",
    "AlternatingExtremes",
    "ConditionReport",
    "ConditionStatus",
    "Constant",
    "EnumerationLimitError",
    "GeometricSpec",
    "Graph",
    "PeriodicCycle",
    "Protocol",
    "RoundTrace",
    "SimulationConfig",
    "SimulationResult",
    "Stationary",
    "TrimResult",
    "UniformRandom",
    "UniformRange",
    "Verdict",
    "WeightAssignment",
    "advance_cured_flag",
    "assign_weights",
    "check_c2_prime",
    "check_protocol_conditions",
    "contraction_certificate",
    "generate_complete",
    "generate_geometric",
    "geometric_from_positions",
    "is_r_s_robust",
    "max_robustness",
    "max_s_for_r",
    "read_graph",
    "run_simulation",
    "sample_positions",
    "should_send",
    "spread",
    "sufficient_by_degree",
    "trim",
    "trimmed_mean",
    "update_value",
    "valid_thetas",
    "write_graph",
]
