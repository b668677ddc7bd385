"""Adversary models, movement policies, and broadcast strategies.

A fixed pool of ``f_real`` adversaries occupies one host agent each.  The
model decides when a compromised agent returns to normal operation and what
it knows at that moment; the movement policy decides where adversaries go;
the strategy decides what a compromised agent broadcasts.  All randomness
flows through a generator owned by the engine so runs are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Union

import numpy as np


class AdversaryModel(Enum):
    """When compromised agents move and how much cured agents know.

    STATIC adversaries never move.  M1 adversaries move at the send step:
    the old host broadcasts one last faulty value, then collects and updates
    as a regular agent in the same round.  M2 adversaries move between
    rounds and the freed agent knows it was compromised; M3 moves the same
    way but the freed agent is unaware, so it keeps broadcasting the
    corrupted memory until the averaging washes it out.
    """

    STATIC = "static"
    M1 = "m1"
    M2 = "m2"
    M3 = "m3"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Stationary:
    """Adversaries stay on their initial hosts."""


@dataclass(frozen=True)
class UniformRandom:
    """Each adversary hops to a uniformly random agent nobody occupies."""


@dataclass(frozen=True)
class PeriodicCycle:
    """Adversaries walk a fixed host list, advancing every ``period`` rounds."""

    hosts: tuple[int, ...]
    period: int = 1

    def __post_init__(self) -> None:
        if not self.hosts:
            raise ValueError("cycle needs at least one host")
        if len(set(self.hosts)) != len(self.hosts):
            raise ValueError("cycle hosts must be distinct")
        if any(h < 0 for h in self.hosts):
            raise ValueError("cycle hosts must be nonnegative ids")
        if self.period < 1:
            raise ValueError("period must be positive")


MovePolicy = Union[Stationary, UniformRandom, PeriodicCycle]


@dataclass(frozen=True)
class Constant:
    """Broadcast the same value every round."""

    value: float


@dataclass(frozen=True)
class UniformRange:
    """Broadcast a fresh uniform draw from [low, high] every round."""

    low: float
    high: float

    def __post_init__(self) -> None:
        if not self.low <= self.high:
            raise ValueError("need low <= high")


@dataclass(frozen=True)
class AlternatingExtremes:
    """Broadcast +magnitude on even rounds and -magnitude on odd rounds."""

    magnitude: float


AttackStrategy = Union[Constant, UniformRange, AlternatingExtremes]


@dataclass
class AdversaryConfig:
    """Adversary population and behavior for one run.

    ``f`` is the bound the protocol is dimensioned for; ``f_real`` is how
    many adversaries actually exist, and may legitimately exceed ``f`` to
    probe where a protocol breaks.  ``omit_final_broadcast`` suppresses a
    departing M2/M3 host's last faulty broadcast, modeling an adversary that
    abandons its host just before the send instead of right after it.
    """

    model: AdversaryModel
    f: int
    f_real: int
    policy: MovePolicy = field(default_factory=Stationary)
    strategy: AttackStrategy = field(default_factory=lambda: Constant(0.0))
    seed: int | None = None
    omit_final_broadcast: bool = False

    def __post_init__(self) -> None:
        if self.f < 0:
            raise ValueError("f must be nonnegative")
        if self.f_real < 0:
            raise ValueError("f_real must be nonnegative")


def initial_hosts(cfg: AdversaryConfig, n: int, rng: np.random.Generator) -> tuple[int, ...]:
    """Choose the round-0 hosts, one per adversary.

    PeriodicCycle adversaries start on a prefix of the cycle; otherwise the
    hosts are a uniform without-replacement sample.
    """
    if cfg.f_real == 0:
        return ()
    if cfg.f_real > n:
        raise ValueError(f"cannot place {cfg.f_real} adversaries on {n} agents")
    if isinstance(cfg.policy, PeriodicCycle):
        cyc = cfg.policy.hosts
        if any(h >= n for h in cyc):
            raise ValueError("cycle host id outside the node range")
        if cfg.f_real > len(cyc):
            raise ValueError("more adversaries than cycle hosts")
        return cyc[: cfg.f_real]
    picks = rng.choice(n, size=cfg.f_real, replace=False)
    return tuple(int(x) for x in picks)


def schedule_round(
    cfg: AdversaryConfig,
    k: int,
    hosts: tuple[int, ...],
    n: int,
    rng: np.random.Generator,
) -> tuple[tuple[int, ...], frozenset[int]]:
    """Hosts after round k's movement, plus the agents that were freed.

    The returned tuple is ordered by adversary index.  Movement targets are
    always disjoint from every currently occupied host; for UniformRandom
    this is a without-replacement draw from the unoccupied agents, while a
    PeriodicCycle whose next stop is occupied is a configuration error.
    """
    if cfg.model is AdversaryModel.STATIC or isinstance(cfg.policy, Stationary) or not hosts:
        return hosts, frozenset()
    if isinstance(cfg.policy, PeriodicCycle):
        if (k + 1) % cfg.policy.period != 0:
            return hosts, frozenset()
        cyc = cfg.policy.hosts
        occupied = set(hosts)
        new_hosts = []
        for h in hosts:
            target = cyc[(cyc.index(h) + 1) % len(cyc)]
            if target != h and target in occupied:
                raise ValueError(
                    f"cycle step from {h} lands on {target}, already hosting an adversary"
                )
            new_hosts.append(target)
        return tuple(new_hosts), frozenset(hosts) - set(new_hosts)
    # UniformRandom: sequential without-replacement over the free agents
    free = sorted(set(range(n)) - set(hosts))
    new_hosts = []
    for _ in hosts:
        if not free:
            raise ValueError("no free agent left to move an adversary to")
        j = int(rng.integers(len(free)))
        new_hosts.append(free.pop(j))
    return tuple(new_hosts), frozenset(hosts) - set(new_hosts)


def broadcast_value(strategy: AttackStrategy, k: int, rng: np.random.Generator) -> float:
    """The faulty value one adversary injects at round k."""
    if isinstance(strategy, Constant):
        return strategy.value
    if isinstance(strategy, UniformRange):
        return float(rng.uniform(strategy.low, strategy.high))
    return strategy.magnitude if k % 2 == 0 else -strategy.magnitude


def classify(
    n: int, hosts: tuple[int, ...], thetas: list[int]
) -> tuple[frozenset[int], frozenset[int], frozenset[int]]:
    """Partition the agents into adversarial / cured / regular sets.

    Cured is exactly the raised first-stage flag: agents in later recovery
    stages already count as regular again.
    """
    a = frozenset(hosts)
    c = frozenset(i for i in range(n) if thetas[i] == 1 and i not in a)
    r = frozenset(range(n)) - a - c
    return a, c, r
