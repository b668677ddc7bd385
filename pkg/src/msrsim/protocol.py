"""Trimming and update rules for the MSR protocol family.

Each agent sorts the values available to it, deletes a bounded number of
extremes from both ends, and averages what survives with equal weights.  The
five rules differ in which values enter the candidate pool (received only, or
received plus the agent's own), how many extremes are deleted, and whether
deletion is conditional on the extreme exceeding the agent's own value.
Protocols P2 and P2A additionally carry a per-agent cured flag ``theta`` that
silences a freshly recovered agent and switches it to a received-only rule
for one round (P2) or a two-stage recovery (P2A).
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence


class Protocol(Enum):
    """Update rule selector."""

    MSR = "msr"
    P1 = "p1"
    P2 = "p2"
    P2A = "p2a"
    P3 = "p3"

    def __str__(self) -> str:  # keeps CLI/CSV output short
        return self.value


# theta values each rule understands; anything else is a state machine bug
_VALID_THETAS: dict[Protocol, tuple[int, ...]] = {
    Protocol.MSR: (0,),
    Protocol.P1: (0,),
    Protocol.P2: (0, 1),
    Protocol.P2A: (0, 1, 2),
    Protocol.P3: (0,),
}


def valid_thetas(protocol: Protocol) -> tuple[int, ...]:
    """Cured-flag values that are legal under the given rule."""
    return _VALID_THETAS[protocol]


def _check_theta(protocol: Protocol, theta: int) -> None:
    if theta not in _VALID_THETAS[protocol]:
        raise ValueError(f"theta={theta} is not valid under {protocol}")


@dataclass
class AgentState:
    """One agent's local state entering a round."""

    id: int
    value: float
    theta: int = 0


@dataclass
class TrimResult:
    """Outcome of one agent's deletion step.

    ``retained`` maps contributor id to value (the agent's own entry uses its
    own id).  The removed lists are ordered most extreme first and carry the
    deterministic tie-break order.  ``starved`` means deletion exhausted the
    pool; the caller must hold the previous value instead of averaging.
    """

    retained: dict[int, float]
    removed_high: list[tuple[int, float]]
    removed_low: list[tuple[int, float]]
    starved: bool


@dataclass
class WeightAssignment:
    """Equal convex weights over the retained contributors."""

    weights: dict[int, float]
    gamma: float


def should_send(protocol: Protocol, theta: int) -> bool:
    """Whether an agent with the given cured flag broadcasts this round.

    Under P2 and P2A a raised flag (any nonzero stage) keeps the agent
    silent; the other rules have no silent state.
    """
    _check_theta(protocol, theta)
    return theta == 0


def advance_cured_flag(protocol: Protocol, theta: int, just_cured: bool) -> int:
    """Next cured-flag value at a round boundary.

    ``just_cured`` marks the round in which an adversary left the agent and
    the agent is aware of it.  Rules without a cured state ignore the signal.
    P2 raises the flag for exactly one round; P2A walks 0 -> 1 -> 2 -> 0 so a
    recovered agent stays silent for two rounds.
    """
    _check_theta(protocol, theta)
    if protocol in (Protocol.MSR, Protocol.P1, Protocol.P3):
        return 0
    if just_cured:
        return 1
    if protocol is Protocol.P2:
        return 0
    # P2A: advance the recovery stages
    if theta == 1:
        return 2
    return 0


def _sorted_entries(items: Iterable[tuple[int, float]]) -> list[tuple[int, float]]:
    # descending value; ties broken by ascending id
    return sorted(items, key=lambda kv: (-kv[1], kv[0]))


def _trim_conditional(f: int, agent: AgentState, received: Mapping[int, float]) -> TrimResult:
    """Classic rule: delete up to f strictly-larger and f strictly-smaller
    received values; the agent's own value is always retained."""
    entries = _sorted_entries(received.items())
    own = agent.value
    larger = sum(1 for _, v in entries if v > own)
    smaller = sum(1 for _, v in entries if v < own)
    hi = min(f, larger)
    lo = min(f, smaller)
    removed_high = entries[:hi]
    removed_low = list(reversed(entries[len(entries) - lo :])) if lo else []
    retained = dict(entries[hi : len(entries) - lo])
    retained[agent.id] = own
    return TrimResult(retained, removed_high, removed_low, False)


def _trim_unconditional(
    cut: int, agent: AgentState, received: Mapping[int, float], include_own: bool
) -> TrimResult:
    """Delete the ``cut`` largest then the ``cut`` smallest pool entries
    unconditionally.  The pool may run dry, which starves the agent."""
    pool = list(received.items())
    if include_own:
        pool.append((agent.id, agent.value))
    pool = _sorted_entries(pool)
    hi = min(cut, len(pool))
    removed_high = pool[:hi]
    rest = pool[hi:]
    lo = min(cut, len(rest))
    removed_low = list(reversed(rest[len(rest) - lo :])) if lo else []
    kept = rest[: len(rest) - lo]
    return TrimResult(dict(kept), removed_high, removed_low, not kept)


def trim(
    protocol: Protocol, f: int, agent: AgentState, received: Mapping[int, float]
) -> TrimResult:
    """Apply one rule's deletion step.

    ``received`` maps in-neighbor id to the value heard this round and must
    not contain the agent's own id.  ``f`` is the designed fault bound, not
    the number of adversaries actually present.
    """
    if f < 0:
        raise ValueError("f must be nonnegative")
    _check_theta(protocol, agent.theta)
    if agent.id in received:
        raise ValueError("received values must come from other agents")
    if protocol is Protocol.MSR or (protocol is Protocol.P2A and agent.theta != 1):
        return _trim_conditional(f, agent, received)
    if protocol is Protocol.P3:
        return _trim_unconditional(2 * f, agent, received, include_own=True)
    # P1 always pools its own value; P2 and P2A drop it while the flag is raised
    return _trim_unconditional(f, agent, received, include_own=agent.theta == 0)


def assign_weights(retained_ids: Sequence[int], gamma: float) -> WeightAssignment:
    """Equal weights 1/m over the retained contributors.

    ``gamma`` is the lower bound every weight must respect; violating it
    means the caller configured a floor too large for the pool size.
    """
    if not retained_ids:
        raise ValueError("cannot assign weights over an empty retained set")
    if not 0.0 < gamma < 0.5:
        raise ValueError("gamma must lie in (0, 1/2)")
    m = len(retained_ids)
    w = 1.0 / m
    if w < gamma:
        raise ValueError(f"equal weight 1/{m} falls below the floor gamma={gamma}")
    return WeightAssignment({i: w for i in retained_ids}, gamma)


def update_value(agent: AgentState, result: TrimResult, assignment: WeightAssignment) -> float:
    """Weighted average of the retained values; a starved agent holds."""
    if result.starved:
        return agent.value
    if assignment.weights.keys() != result.retained.keys():
        raise ValueError("weights must cover exactly the retained ids")
    return math.fsum(assignment.weights[i] * result.retained[i] for i in result.retained)


def trimmed_mean(
    protocol: Protocol,
    f: int,
    theta: int,
    own: float,
    received_values: Sequence[float],
) -> tuple[float, bool, int]:
    """Fused trim-and-average used by the engine's hot path.

    Returns ``(new_value, starved, retained_count)``.  Equivalent to trim /
    assign_weights / update_value with equal weights, but works on bare
    values and performs a single exactly-rounded summation, so the result
    does not depend on the order values were received in.  A starved agent
    reports its held value and a retained count of zero.
    """
    if f < 0:
        raise ValueError("f must be nonnegative")
    _check_theta(protocol, theta)
    if protocol is Protocol.MSR or (protocol is Protocol.P2A and theta != 1):
        xs = sorted(received_values)
        lo = min(f, bisect_left(xs, own))
        hi = min(f, len(xs) - bisect_right(xs, own))
        kept = xs[lo : len(xs) - hi]
        m = len(kept) + 1
        return math.fsum(kept + [own]) / m, False, m
    cut = 2 * f if protocol is Protocol.P3 else f
    include_own = theta == 0
    xs = sorted(received_values)
    if include_own:
        xs.insert(bisect_left(xs, own), own)
    xs = xs[: max(len(xs) - cut, 0)]
    kept = xs[min(cut, len(xs)) :]
    if not kept:
        return own, True, 0
    return math.fsum(kept) / len(kept), False, len(kept)
