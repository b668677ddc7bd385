"""Synchronous round engine: send, collect, trim, average, classify, verdict.

One round runs in lockstep for all agents.  Compromised agents broadcast the
adversary's value (their memory is overwritten by it), everyone else
broadcasts its current value unless a recovery flag keeps it silent, and
then every non-compromised agent recomputes its value from the round-start
snapshot via the protocol's trimmed mean.  Movement timing depends on the
adversary model: M1 relocates adversaries at the send step, so the freed
agent collects and updates as a regular agent in the same round, while M2
and M3 relocate at the round boundary.

The verdict tracks two properties against the interval spanned by the
regular agents' initial values: safety (no regular update ever leaves the
interval) and agreement (the regular spread falling under a tolerance that
scales with the initial spread).
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .adversary import (
    AdversaryConfig,
    AdversaryModel,
    Stationary,
    broadcast_value,
    classify,
    initial_hosts,
    schedule_round,
)
from .graph import Graph
from .protocol import Protocol, advance_cured_flag, should_send, trimmed_mean, valid_thetas

DEFAULT_MAX_ROUNDS = 10_000
# Rounds without a new spread minimum before a run is declared stuck.
DEFAULT_STALL_ROUNDS = 500


class PairingWarning(UserWarning):
    """A protocol is being run against an adversary model it was not
    designed around.  The run proceeds; results just need care to read."""


SeedLike = Union[int, None, np.random.SeedSequence]


@dataclass
class SimulationConfig:
    """Everything one run needs.

    ``initial_values`` may be a full id-to-value mapping, a sequence of
    length n, or None for a uniform draw on [0, 100].  ``gamma`` is the
    weight floor used to certify contraction; it defaults to 1/n.
    ``initial_theta`` seeds recovery flags for scenarios that start with an
    already-cured agent.
    """

    graph: Graph
    protocol: Protocol
    adversary: AdversaryConfig
    initial_values: Mapping[int, float] | Sequence[float] | None = None
    initial_theta: Mapping[int, int] | None = None
    gamma: float | None = None
    max_rounds: int = DEFAULT_MAX_ROUNDS
    consensus_tol: float = 1e-6
    master_seed: SeedLike = None
    stall_rounds: int = DEFAULT_STALL_ROUNDS

    def __post_init__(self) -> None:
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be at least 1")
        if self.consensus_tol <= 0.0:
            raise ValueError("consensus_tol must be positive")
        if self.gamma is not None and not 0.0 < self.gamma < 0.5:
            raise ValueError("gamma must lie in (0, 1/2)")
        if self.stall_rounds < 0:
            raise ValueError("stall_rounds must be nonnegative (0 disables)")


@dataclass
class RoundTrace:
    """State produced by one round.

    ``values`` is the post-update state x(k+1).  The classification sets
    describe who acted as what during round k; ``spread`` is max minus min
    over the regular set.
    """

    k: int
    values: tuple[float, ...]
    a_set: frozenset[int]
    c_set: frozenset[int]
    r_set: frozenset[int]
    sent: frozenset[int]
    starved: frozenset[int]
    safety_violations: frozenset[int]
    spread: float


@dataclass
class AdversaryEvent:
    """One adversary-log row: what adversary ``adversary`` did at round k.

    ``value`` is the faulty broadcast (None when the broadcast was omitted
    or the row records a cure).  ``event`` is ``stay``, ``move``, or
    ``cure``; cure rows mark the round in which the named agent starts
    operating on its own again.
    """

    k: int
    adversary: int
    host: int
    value: float | None
    event: str


@dataclass
class Verdict:
    safety_ok: bool
    consensus_ok: bool
    rounds_to_converge: int | None
    final_spread: float
    safety_interval: tuple[float, float]

    def to_dict(self) -> dict:
        return {
            "safety_ok": self.safety_ok,
            "consensus_ok": self.consensus_ok,
            "rounds_to_converge": self.rounds_to_converge,
            "final_V": self.final_spread,
            "safety_interval": list(self.safety_interval),
        }


@dataclass
class SimulationResult:
    config: SimulationConfig
    verdict: Verdict
    traces: list[RoundTrace]
    adversary_log: list[AdversaryEvent]
    initial_values: tuple[float, ...]
    initial_spread: float
    rounds_executed: int
    stalled: bool


def spread(values: Sequence[float], regular: Iterable[int]) -> float:
    """Max minus min over the given agent ids."""
    ids = list(regular)
    if not ids:
        raise ValueError("spread is undefined over an empty regular set")
    vals = [values[i] for i in ids]
    return max(vals) - min(vals)


def contraction_certificate(
    traces: Sequence["RoundTrace | float"],
    gamma: float,
    initial_spread: float | None = None,
) -> bool:
    """Check the geometric decay V(k+1) <= (1 - gamma/2) V(k) along a run.

    A small additive slack scaled to the starting spread absorbs float
    rounding.  Accepts round traces or bare spread values.
    """
    vs = [t.spread if isinstance(t, RoundTrace) else float(t) for t in traces]
    if initial_spread is not None:
        vs.insert(0, float(initial_spread))
    if len(vs) < 2:
        return True
    slack = 1e-9 * max(1.0, vs[0])
    shrink = 1.0 - gamma / 2.0
    return all(b <= shrink * a + slack for a, b in zip(vs, vs[1:]))


def corruption_overrun(protocol: Protocol, model: AdversaryModel, f: int) -> bool:
    """Whether one round can feed more corrupted values into an agent's pool
    (per extreme side) than the protocol's deletion budget removes.

    When it can, freshly freed agents re-enter the regular set while still
    carrying corrupted memory the trimming cannot be relied on to absorb, so
    the engine additionally checks regular memories against the safety
    interval at every round boundary.
    """
    if f == 0 or model in (AdversaryModel.STATIC, AdversaryModel.M1):
        return False
    budget = 2 * f if protocol is Protocol.P3 else f
    if model is AdversaryModel.M3:
        produced = 2 * f
    elif protocol in (Protocol.P2, Protocol.P2A):
        produced = f  # freed agents stay silent under their recovery flag
    else:
        produced = 2 * f
    return produced > budget


def _warn_on_pairing(protocol: Protocol, adv: AdversaryConfig) -> None:
    if protocol in (Protocol.P2, Protocol.P2A) and adv.model is not AdversaryModel.M2:
        warnings.warn(
            f"{protocol} relies on freed agents knowing they were compromised; "
            f"results under model {adv.model} need care to interpret",
            PairingWarning,
            stacklevel=3,
        )
    if (
        adv.model is AdversaryModel.STATIC
        and adv.f_real > 0
        and not isinstance(adv.policy, Stationary)
    ):
        warnings.warn(
            "movement policy has no effect under the static adversary model",
            PairingWarning,
            stacklevel=3,
        )


def _resolve_initial_values(
    spec: Mapping[int, float] | Sequence[float] | None,
    n: int,
    rng: np.random.Generator,
) -> list[float]:
    if spec is None:
        return [float(v) for v in rng.uniform(0.0, 100.0, size=n)]
    if isinstance(spec, Mapping):
        if set(spec.keys()) != set(range(n)):
            raise ValueError("initial_values mapping must cover every agent id exactly once")
        return [float(spec[i]) for i in range(n)]
    vals = [float(v) for v in spec]
    if len(vals) != n:
        raise ValueError(f"expected {n} initial values, got {len(vals)}")
    return vals


def run_simulation(cfg: SimulationConfig, keep_traces: bool = True) -> SimulationResult:
    """Run one configuration to a verdict.

    The run stops at the first safety violation, at the first round whose
    regular spread falls under the effective tolerance, after
    ``stall_rounds`` rounds without a new spread minimum, or at
    ``max_rounds``.
    """
    graph = cfg.graph
    n = graph.n
    protocol = cfg.protocol
    adv = cfg.adversary
    model = adv.model
    _warn_on_pairing(protocol, adv)

    gamma = 1.0 / n if cfg.gamma is None else float(cfg.gamma)
    if not 0.0 < gamma < 0.5:
        raise ValueError("gamma must lie in (0, 1/2); the default 1/n needs n >= 3")

    master = (
        cfg.master_seed
        if isinstance(cfg.master_seed, np.random.SeedSequence)
        else np.random.SeedSequence(cfg.master_seed)
    )
    init_ss, adv_ss = master.spawn(2)
    init_rng = np.random.default_rng(init_ss)
    adv_rng = (
        np.random.default_rng(adv.seed) if adv.seed is not None else np.random.default_rng(adv_ss)
    )

    values = _resolve_initial_values(cfg.initial_values, n, init_rng)
    thetas = [0] * n
    if cfg.initial_theta:
        for i, th in cfg.initial_theta.items():
            if not 0 <= i < n:
                raise ValueError(f"initial_theta id {i} outside the node range")
            if th not in valid_thetas(protocol):
                raise ValueError(f"theta={th} is not valid under {protocol}")
            thetas[i] = int(th)

    hosts = initial_hosts(adv, n, adv_rng)
    for h in hosts:
        thetas[h] = 0  # hosting an adversary wipes any recovery flag

    # The safety interval and the convergence scale come from the agents
    # that are regular before anything moves or broadcasts.
    _, _, r0 = classify(n, hosts, thetas)
    if not r0:
        raise ValueError("no regular agents at round 0")
    r0_vals = [values[i] for i in r0]
    s_lo, s_hi = min(r0_vals), max(r0_vals)
    v0 = s_hi - s_lo
    eff_tol = cfg.consensus_tol * max(1.0, v0)
    guard = 1e-12 * max(1.0, abs(s_lo), abs(s_hi))
    lo_chk = s_lo - guard
    hi_chk = s_hi + guard
    literal_check = corruption_overrun(protocol, model, adv.f)

    in_lists = [sorted(s) for s in graph.in_neighbors]
    is_m1 = model is AdversaryModel.M1
    boundary_move = model in (AdversaryModel.M2, AdversaryModel.M3)

    traces: list[RoundTrace] = []
    events: list[AdversaryEvent] = []
    init_snapshot = tuple(values)
    safety_ok = True
    consensus_ok = v0 <= eff_tol
    rounds_to_converge: int | None = 0 if consensus_ok else None
    final_v = v0
    stalled = False
    best_v = v0
    best_round = 0
    rounds_executed = 0
    pending_cures: list[tuple[int, int]] = []
    host_set = set(hosts)

    if not consensus_ok:
        for k in range(cfg.max_rounds):
            rounds_executed = k + 1
            for a, h in pending_cures:
                events.append(AdversaryEvent(k, a, h, None, "cure"))
            pending_cures = []

            adv_values = [broadcast_value(adv.strategy, k, adv_rng) for _ in range(adv.f_real)]
            new_hosts, just_cured = schedule_round(adv, k, hosts, n, adv_rng)

            # send: adversaries override their host's memory and broadcast
            br: list[float | None] = [None] * n
            for a, h in enumerate(hosts):
                v = adv_values[a]
                values[h] = v
                moved = new_hosts[a] != h
                omitted = adv.omit_final_broadcast and boundary_move and moved
                if not omitted:
                    br[h] = v
                events.append(
                    AdversaryEvent(k, a, h, None if omitted else v, "move" if moved else "stay")
                )
            for i in range(n):
                if i not in host_set and should_send(protocol, thetas[i]):
                    br[i] = values[i]

            if is_m1 and new_hosts != hosts:
                # relocate at the send step: the freed agent updates as a
                # regular (or freshly cured) agent later this same round
                for a, (old, new) in enumerate(zip(hosts, new_hosts)):
                    if old != new:
                        events.append(AdversaryEvent(k, a, old, None, "cure"))
                for i in just_cured:
                    thetas[i] = advance_cured_flag(protocol, thetas[i], True)
                hosts = new_hosts
                host_set = set(hosts)
                for h in hosts:
                    thetas[h] = 0

            a_set = frozenset(host_set)
            cured_now = frozenset(i for i in range(n) if thetas[i] == 1 and i not in a_set)

            # collect and update from the round-start snapshot
            new_values = list(values)
            starved_ids: list[int] = []
            violations: list[int] = []
            for i in range(n):
                if i in host_set:
                    continue
                recv = [br[j] for j in in_lists[i] if br[j] is not None]
                out, starved_i, kept = trimmed_mean(protocol, adv.f, thetas[i], values[i], recv)
                if starved_i:
                    starved_ids.append(i)
                elif 1.0 / kept < gamma:
                    raise ValueError(
                        f"equal weight 1/{kept} at agent {i} falls below the floor gamma={gamma}"
                    )
                # a held value counts as this round's output too
                if out < lo_chk or out > hi_chk:
                    violations.append(i)
                new_values[i] = out
            if is_m1:
                for a, h in enumerate(hosts):
                    new_values[h] = adv_values[a]  # infection overwrites memory
            values = new_values

            # spread over the regular set of this round
            lo_v = hi_v = None
            for i in range(n):
                if i in host_set or thetas[i] == 1:
                    continue
                x = values[i]
                if lo_v is None or x < lo_v:
                    lo_v = x
                if hi_v is None or x > hi_v:
                    hi_v = x
            v = (hi_v - lo_v) if lo_v is not None else float("nan")
            final_v = v

            # boundary relocation, then recovery-flag bookkeeping
            if boundary_move and new_hosts != hosts:
                for a, (old, new) in enumerate(zip(hosts, new_hosts)):
                    if old != new:
                        pending_cures.append((a, old))
                hosts = new_hosts
                host_set = set(hosts)
                for h in hosts:
                    thetas[h] = 0
            cure_signal = just_cured if model is AdversaryModel.M2 else frozenset()
            for i in range(n):
                if i in host_set:
                    continue
                if thetas[i] or i in cure_signal:
                    thetas[i] = advance_cured_flag(protocol, thetas[i], i in cure_signal)

            # agents rejoining the regular set must not smuggle corrupted
            # memory past the trimming budget
            if literal_check:
                for i in range(n):
                    if i in host_set or thetas[i] == 1:
                        continue
                    x = values[i]
                    if x < lo_chk or x > hi_chk:
                        violations.append(i)

            if violations:
                safety_ok = False
            if v <= eff_tol and rounds_to_converge is None:
                consensus_ok = True
                rounds_to_converge = k + 1

            if keep_traces:
                traces.append(
                    RoundTrace(
                        k=k,
                        values=tuple(values),
                        a_set=a_set,
                        c_set=cured_now,
                        r_set=frozenset(range(n)) - a_set - cured_now,
                        sent=frozenset(i for i in range(n) if br[i] is not None),
                        starved=frozenset(starved_ids),
                        safety_violations=frozenset(violations),
                        spread=v,
                    )
                )

            if not safety_ok or consensus_ok:
                break
            if v < best_v:
                best_v = v
                best_round = k + 1
            elif cfg.stall_rounds and (k + 1 - best_round) >= cfg.stall_rounds:
                stalled = True
                break

    verdict = Verdict(
        safety_ok=safety_ok,
        consensus_ok=consensus_ok,
        rounds_to_converge=rounds_to_converge,
        final_spread=final_v,
        safety_interval=(s_lo, s_hi),
    )
    return SimulationResult(
        config=cfg,
        verdict=verdict,
        traces=traces,
        adversary_log=events,
        initial_values=init_snapshot,
        initial_spread=v0,
        rounds_executed=rounds_executed,
        stalled=stalled,
    )


# ---------------------------------------------------------------------------
# serialization


def write_trace_csv(result: SimulationResult, path: str | Path) -> None:
    """Per-agent round log: ``round,id,value,class,sent,starved``."""
    n = len(result.initial_values)
    lines = ["round,id,value,class,sent,starved"]
    for t in result.traces:
        for i in range(n):
            cls = "A" if i in t.a_set else ("C" if i in t.c_set else "R")
            lines.append(
                f"{t.k},{i},{t.values[i]!r},{cls},{int(i in t.sent)},{int(i in t.starved)}"
            )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_adversary_csv(result: SimulationResult, path: str | Path) -> None:
    """Adversary action log: ``round,adversary,host,value,event``."""
    lines = ["round,adversary,host,value,event"]
    for e in result.adversary_log:
        value = "" if e.value is None else repr(e.value)
        lines.append(f"{e.k},{e.adversary},{e.host},{value},{e.event}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_verdict_json(result: SimulationResult, path: str | Path) -> None:
    data = result.verdict.to_dict()
    data["rounds_executed"] = result.rounds_executed
    data["stalled"] = result.stalled
    data["initial_V"] = result.initial_spread
    Path(path).write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")
