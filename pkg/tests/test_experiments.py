"""Sweep harness: grids, matrices, thresholds, and their CSV artifacts."""

import csv
import math

import pytest

from msrsim import (
    AdversaryModel,
    Protocol,
    UniformRandom,
    UniformRange,
    geometric_from_positions,
    is_r_s_robust,
)
from msrsim.experiments import (
    DEFAULT_F_REAL_LEVELS,
    DEFAULT_RADII,
    SweepSpec,
    _positions_for,
    cross_model_matrix,
    scale_spec,
    success_rate_grid,
    threshold_radius,
    topology_seeds,
    write_grid_csv,
    write_matrix_csv,
    write_threshold_csv,
)


def _spec(**kw):
    base = dict(
        protocol=Protocol.P1,
        model=AdversaryModel.M1,
        f=1,
        n=20,
        side=100.0,
        radii=(50.0, 70.0, 90.0),
        f_real_levels=(0, 1, 2),
        topologies=2,
        trials=1,
        base_seed=3,
        policy=UniformRandom(),
        strategy=UniformRange(-100.0, 0.0),
        stall_rounds=120,
    )
    base.update(kw)
    return SweepSpec(**base)


class TestSpecPlumbing:
    def test_default_grids(self):
        assert DEFAULT_RADII == tuple(float(r) for r in range(20, 71, 5))
        assert DEFAULT_F_REAL_LEVELS == tuple(range(11))

    def test_empty_grids_rejected(self):
        with pytest.raises(ValueError):
            _spec(radii=())
        with pytest.raises(ValueError):
            _spec(f_real_levels=())
        with pytest.raises(ValueError):
            _spec(trials=0)

    def test_scale_spec_keeps_density(self):
        spec = _spec(n=100, radii=(20.0, 40.0))
        scaled = scale_spec(spec, 0.25)
        assert scaled.n == 25
        assert scaled.radii == (40.0, 80.0)
        # expected neighbor count ~ n * pi r^2 / side^2 is unchanged
        before = spec.n * spec.radii[0] ** 2
        after = scaled.n * scaled.radii[0] ** 2
        assert math.isclose(before, after)

    def test_scale_one_is_identity(self):
        spec = _spec()
        assert scale_spec(spec, 1.0) == spec

    def test_topology_seeds_stable(self):
        assert topology_seeds(0, 3) == topology_seeds(0, 3)
        assert topology_seeds(0, 5)[:3] == topology_seeds(0, 3)
        assert topology_seeds(0, 3) != topology_seeds(1, 3)


class TestGrid:
    def test_grid_deterministic(self):
        a = success_rate_grid(_spec())
        b = success_rate_grid(_spec())
        assert a.successes == b.successes
        assert a.topology_seeds == b.topology_seeds

    def test_cells_independent_of_grid_shape(self):
        # evaluating a sub-grid reproduces exactly the same cell outcomes
        full = success_rate_grid(_spec())
        sub = success_rate_grid(_spec(radii=(70.0,), f_real_levels=(1,)))
        assert sub.successes[(1, 70.0)] == full.successes[(1, 70.0)]

    def test_no_adversary_dense_radius_is_perfect(self):
        res = success_rate_grid(_spec(f_real_levels=(0,), radii=(90.0,), topologies=3))
        assert res.rate(0, 90.0) == 1.0

    def test_overloaded_mobile_rate_collapses(self):
        res = success_rate_grid(_spec(f_real_levels=(2,), radii=(70.0, 90.0), topologies=3))
        assert res.rate(2, 70.0) == 0.0
        assert res.rate(2, 90.0) == 0.0

    def test_grid_csv_format(self, tmp_path):
        res = success_rate_grid(_spec())
        path = tmp_path / "grid.csv"
        write_grid_csv(res, path)
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert rows[0].keys() == {"f_real", "radius", "success_rate", "trials"}
        assert len(rows) == 9
        got = {(int(r["f_real"]), float(r["radius"])): float(r["success_rate"]) for r in rows}
        assert got[(0, 90.0)] == res.rate(0, 90.0)


@pytest.mark.filterwarnings("ignore::msrsim.engine.PairingWarning")
class TestMatrix:
    def test_small_matrix_frozen(self):
        spec = _spec(
            f=2, n=30, radii=(75.0,), f_real_levels=(0, 1, 2, 3, 4),
            topologies=3, base_seed=7, stall_rounds=500,
        )
        protocols = list(Protocol)
        models = list(AdversaryModel)
        res = cross_model_matrix(protocols, models, spec)
        rows = {
            p: [res.max_f_real[(p, m)] for m in models] for p in protocols
        }
        assert rows[Protocol.MSR] == [2, 0, 0, 0]
        assert rows[Protocol.P1] == [2, 2, 0, 0]
        assert rows[Protocol.P2] == [2, 2, 2, 0]
        assert rows[Protocol.P2A] == [2, 2, 2, 0]
        assert rows[Protocol.P3] == [4, 4, 2, 2]

    def test_disconnected_graph_encodes_minus_one(self):
        # radius too small for any edges: even f_real=0 fails
        spec = _spec(
            protocol=Protocol.MSR, model=AdversaryModel.STATIC,
            f=0, n=10, radii=(1.0,), f_real_levels=(0, 1), topologies=1,
            stall_rounds=20,
        )
        res = cross_model_matrix([Protocol.MSR], [AdversaryModel.STATIC], spec)
        assert res.max_f_real[(Protocol.MSR, AdversaryModel.STATIC)] == -1

    def test_matrix_csv_format(self, tmp_path):
        spec = _spec(radii=(90.0,), f_real_levels=(0, 1), topologies=1)
        res = cross_model_matrix([Protocol.P1], [AdversaryModel.STATIC, AdversaryModel.M1], spec)
        path = tmp_path / "matrix.csv"
        write_matrix_csv(res, path)
        rows = list(csv.DictReader(open(path, newline="")))
        assert [r["protocol"] for r in rows] == ["p1", "p1"]
        assert [r["model"] for r in rows] == ["static", "m1"]
        assert all(int(r["max_f_real"]) >= 0 for r in rows)


class TestThreshold:
    def test_threshold_matches_connectivity_oracle(self):
        # with no adversary and f=0 the protocol is plain averaging, so the
        # threshold radius is exactly where the topology becomes 1-robust
        spec = _spec(
            protocol=Protocol.MSR, model=AdversaryModel.STATIC,
            f=0, n=12, radii=(15.0, 25.0, 35.0, 45.0, 60.0, 80.0, 110.0, 145.0),
            f_real_levels=(0,), topologies=4, base_seed=11, stall_rounds=200,
        )
        res = threshold_radius(spec)
        for topo_seed, found in res.thresholds.items():
            pos = _positions_for(topo_seed, spec.n, spec.side)
            oracle = None
            for r in spec.radii:
                g = geometric_from_positions(pos, r)
                if is_r_s_robust(g, 1, 1):
                    oracle = r
                    break
            assert found == oracle

    def test_threshold_requires_ascending_radii(self):
        with pytest.raises(ValueError):
            threshold_radius(_spec(radii=(90.0, 50.0)))

    def test_threshold_none_when_nothing_succeeds(self):
        spec = _spec(
            protocol=Protocol.MSR, model=AdversaryModel.STATIC,
            f=0, n=10, radii=(0.5, 1.0), f_real_levels=(0,), topologies=2,
            stall_rounds=20,
        )
        res = threshold_radius(spec)
        assert all(v is None for v in res.thresholds.values())

    def test_threshold_csv_blank_for_none(self, tmp_path):
        spec = _spec(
            protocol=Protocol.MSR, model=AdversaryModel.STATIC,
            f=0, n=10, radii=(0.5, 1.0), f_real_levels=(0,), topologies=1,
            stall_rounds=20,
        )
        res = threshold_radius(spec)
        path = tmp_path / "th.csv"
        write_threshold_csv([res], path)
        rows = list(csv.DictReader(open(path, newline="")))
        assert rows[0].keys() == {"topology_seed", "protocol", "model", "f", "threshold_radius"}
        assert rows[0]["threshold_radius"] == ""

    def test_threshold_deterministic(self):
        spec = _spec(f=1, n=16, radii=(40.0, 60.0, 80.0, 100.0), topologies=2)
        a = threshold_radius(spec)
        b = threshold_radius(spec)
        assert a.thresholds == b.thresholds


def test_parallel_grid_matches_serial():
    spec = _spec(topologies=3)
    serial = success_rate_grid(spec, jobs=1)
    parallel = success_rate_grid(spec, jobs=2)
    assert serial.successes == parallel.successes
