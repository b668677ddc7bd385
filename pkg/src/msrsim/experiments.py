"""Batch experiment harness: success grids, fault-level matrices, thresholds.

Every run's seed is derived from the topology seed and the cell coordinates,
never from the iteration order, so sweeps can be split, reordered, or run in
parallel without changing a single outcome.  A run counts as a success only
if it both kept safety and reached agreement.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from multiprocessing import Pool
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .adversary import (
    AdversaryConfig,
    AdversaryModel,
    AttackStrategy,
    MovePolicy,
    UniformRandom,
    UniformRange,
)
from .engine import SimulationConfig, run_simulation
from .graph import Graph, geometric_from_positions, sample_positions
from .protocol import Protocol

logger = logging.getLogger(__name__)

DEFAULT_RADII: tuple[float, ...] = tuple(float(r) for r in range(20, 71, 5))
DEFAULT_F_REAL_LEVELS: tuple[int, ...] = tuple(range(0, 11))


@dataclass(frozen=True)
class SweepSpec:
    """One protocol/model sweep over random geometric topologies."""

    protocol: Protocol
    model: AdversaryModel
    f: int = 5
    n: int = 100
    side: float = 100.0
    radii: tuple[float, ...] = DEFAULT_RADII
    f_real_levels: tuple[int, ...] = DEFAULT_F_REAL_LEVELS
    topologies: int = 10
    trials: int = 1
    base_seed: int = 0
    policy: MovePolicy = UniformRandom()
    strategy: AttackStrategy = UniformRange(-100.0, 0.0)
    gamma: float | None = None
    max_rounds: int = 10_000
    consensus_tol: float = 1e-6
    stall_rounds: int = 500

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.side <= 0:
            raise ValueError("side must be positive")
        if not self.radii:
            raise ValueError("radius grid must not be empty")
        if not self.f_real_levels:
            raise ValueError("f_real grid must not be empty")
        if any(r < 0 for r in self.radii):
            raise ValueError("radii must be nonnegative")
        if self.topologies < 1:
            raise ValueError("need at least one topology")
        if self.trials < 1:
            raise ValueError("need at least one trial per cell")
        if self.f < 0 or any(fr < 0 for fr in self.f_real_levels):
            raise ValueError("fault counts must be nonnegative")


def scale_spec(spec: SweepSpec, factor: float) -> SweepSpec:
    """Shrink a sweep while keeping the expected node density.

    The node count scales by ``factor`` and every radius by 1/sqrt(factor),
    so the expected neighbor count stays put.
    """
    if factor <= 0:
        raise ValueError("scale factor must be positive")
    n = max(1, round(spec.n * factor))
    radii = tuple(r / math.sqrt(factor) for r in spec.radii)
    return replace(spec, n=n, radii=radii)


def topology_seeds(base_seed: int, count: int) -> list[int]:
    """Stable per-topology integer seeds derived from one base seed."""
    return [int(x) for x in np.random.SeedSequence(base_seed).generate_state(count)]


def _positions_for(topo_seed: int, n: int, side: float) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(topo_seed))
    return sample_positions(n, side, rng)


def _run_seed(topo_seed: int, f_real: int, radius: float, trial: int) -> np.random.SeedSequence:
    # radius enters as a fixed-point key so float formatting can't split cells
    return np.random.SeedSequence((topo_seed, f_real, int(round(radius * 1e6)), trial))


def _single_run(graph: Graph, spec: SweepSpec, f_real: int, radius: float, topo_seed: int, trial: int) -> bool:
    adv = AdversaryConfig(
        model=spec.model,
        f=spec.f,
        f_real=f_real,
        policy=spec.policy,
        strategy=spec.strategy,
    )
    cfg = SimulationConfig(
        graph=graph,
        protocol=spec.protocol,
        adversary=adv,
        gamma=spec.gamma,
        max_rounds=spec.max_rounds,
        consensus_tol=spec.consensus_tol,
        stall_rounds=spec.stall_rounds,
        master_seed=_run_seed(topo_seed, f_real, radius, trial),
    )
    res = run_simulation(cfg, keep_traces=False)
    return res.verdict.safety_ok and res.verdict.consensus_ok


# ---------------------------------------------------------------------------
# success-rate grid


@dataclass
class GridResult:
    spec: SweepSpec
    topology_seeds: list[int]
    successes: dict[tuple[int, float], int]
    trials_per_cell: int

    def rate(self, f_real: int, radius: float) -> float:
        return self.successes[(f_real, radius)] / self.trials_per_cell


def _grid_slab(args: tuple[SweepSpec, int]) -> dict[tuple[int, float], int]:
    spec, topo_seed = args
    positions = _positions_for(topo_seed, spec.n, spec.side)
    counts: dict[tuple[int, float], int] = {}
    for radius in spec.radii:
        graph = geometric_from_positions(positions, radius)
        for f_real in spec.f_real_levels:
            ok = 0
            for trial in range(spec.trials):
                ok += _single_run(graph, spec, f_real, radius, topo_seed, trial)
            counts[(f_real, radius)] = ok
    return counts


def success_rate_grid(spec: SweepSpec, jobs: int = 1) -> GridResult:
    """Success rate per (f_real, radius) cell over all topologies and trials."""
    seeds = topology_seeds(spec.base_seed, spec.topologies)
    args = [(spec, s) for s in seeds]
    if jobs > 1 and len(args) > 1:
        with Pool(min(jobs, len(args))) as pool:
            slabs = pool.map(_grid_slab, args)
    else:
        slabs = [_grid_slab(a) for a in args]
    totals: dict[tuple[int, float], int] = {
        (f_real, radius): 0 for radius in spec.radii for f_real in spec.f_real_levels
    }
    for slab in slabs:
        for key, ok in slab.items():
            totals[key] += ok
    return GridResult(
        spec=spec,
        topology_seeds=seeds,
        successes=totals,
        trials_per_cell=spec.topologies * spec.trials,
    )


def write_grid_csv(result: GridResult, path: str | Path) -> None:
    lines = ["f_real,radius,success_rate,trials"]
    for f_real in result.spec.f_real_levels:
        for radius in result.spec.radii:
            rate = result.rate(f_real, radius)
            lines.append(f"{f_real},{radius:g},{rate:g},{result.trials_per_cell}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# max tolerated f_real matrix


@dataclass
class MatrixResult:
    protocols: list[Protocol]
    models: list[AdversaryModel]
    f: int
    radius: float
    topology_seeds: list[int]
    max_f_real: dict[tuple[Protocol, AdversaryModel], int]


def _matrix_cell(
    args: tuple[Protocol, AdversaryModel, SweepSpec, list[int]],
) -> tuple[Protocol, AdversaryModel, int]:
    protocol, model, base_spec, seeds = args
    spec = replace(base_spec, protocol=protocol, model=model)
    radius = spec.radii[0]
    graphs = {
        s: geometric_from_positions(_positions_for(s, spec.n, spec.side), radius)
        for s in seeds
    }
    best = -1
    for f_real in spec.f_real_levels:
        level_ok = True
        for topo_seed in seeds:
            for trial in range(spec.trials):
                if not _single_run(graphs[topo_seed], spec, f_real, radius, topo_seed, trial):
                    level_ok = False
                    break
            if not level_ok:
                break
        if not level_ok:
            break
        best = f_real
    logger.info("matrix cell %s/%s: max f_real %d", protocol, model, best)
    return protocol, model, best


def cross_model_matrix(
    protocols: Sequence[Protocol],
    models: Sequence[AdversaryModel],
    spec: SweepSpec,
    jobs: int = 1,
) -> MatrixResult:
    """Largest f_real every protocol/model pair survives on every topology.

    The f_real levels are scanned in the given order and the scan stops at
    the first level with any failed run; a pair that fails its first level
    reports -1.  All pairs share the same topology set, drawn from the spec's
    base seed at its first radius.
    """
    seeds = topology_seeds(spec.base_seed, spec.topologies)
    args = [(p, m, spec, seeds) for p in protocols for m in models]
    if jobs > 1 and len(args) > 1:
        with Pool(min(jobs, len(args))) as pool:
            cells = pool.map(_matrix_cell, args)
    else:
        cells = [_matrix_cell(a) for a in args]
    return MatrixResult(
        protocols=list(protocols),
        models=list(models),
        f=spec.f,
        radius=spec.radii[0],
        topology_seeds=seeds,
        max_f_real={(p, m): v for p, m, v in cells},
    )


def write_matrix_csv(result: MatrixResult, path: str | Path) -> None:
    lines = ["protocol,model,max_f_real"]
    for p in result.protocols:
        for m in result.models:
            lines.append(f"{p},{m},{result.max_f_real[(p, m)]}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# threshold radius


@dataclass
class ThresholdResult:
    spec: SweepSpec
    # topology seed -> smallest all-trials-successful radius, None if none is
    thresholds: dict[int, float | None]


def _threshold_slab(args: tuple[SweepSpec, int]) -> tuple[int, float | None]:
    spec, topo_seed = args
    positions = _positions_for(topo_seed, spec.n, spec.side)
    f_real = spec.f
    for radius in spec.radii:
        graph = geometric_from_positions(positions, radius)
        if all(
            _single_run(graph, spec, f_real, radius, topo_seed, trial)
            for trial in range(spec.trials)
        ):
            return topo_seed, radius
    return topo_seed, None


def threshold_radius(spec: SweepSpec, jobs: int = 1) -> ThresholdResult:
    """Per topology, the smallest grid radius where every trial succeeds.

    Adversary count equals the design bound f.  The radius grid is scanned
    in ascending order; topologies where no grid radius works map to None.
    """
    if list(spec.radii) != sorted(spec.radii):
        raise ValueError("radius grid must be ascending for a threshold scan")
    seeds = topology_seeds(spec.base_seed, spec.topologies)
    args = [(spec, s) for s in seeds]
    if jobs > 1 and len(args) > 1:
        with Pool(min(jobs, len(args))) as pool:
            rows = pool.map(_threshold_slab, args)
    else:
        rows = [_threshold_slab(a) for a in args]
    return ThresholdResult(spec=spec, thresholds=dict(rows))


def write_threshold_csv(results: Iterable[ThresholdResult], path: str | Path) -> None:
    """One row per (topology, protocol, model, f) combination."""
    lines = ["topology_seed,protocol,model,f,threshold_radius"]
    for res in results:
        spec = res.spec
        for topo_seed, radius in res.thresholds.items():
            value = "" if radius is None else f"{radius:g}"
            lines.append(f"{topo_seed},{spec.protocol},{spec.model},{spec.f},{value}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
