import math

import numpy as np
import pytest

from morphoswarm import fieldexpr as fe
from morphoswarm import sim
from morphoswarm.sim import (
    EPS_OVERLAP,
    SimParams,
    SwarmState,
    cumulative_field,
    gradient,
    gradient_from_receptor_values,
    gradients_all,
    receptor_points,
    run,
    snapshot_schedule,
    step,
    validate_ic,
)

IDENTITY = fe.parse("d")  # cheap field for dynamics-agnostic tests
ELLIPSE = fe.preset("ellipse")


def small_params(**kw) -> SimParams:
    base = dict(n=3, steps=5, record_interval=2, seed=1)
    base.update(kw)
    return SimParams(**base)


class TestReceptors:
    def test_axis_receptors(self):
        pts = receptor_points((0.0, 0.0), 1.0)
        assert pts.shape == (8, 2)
        for expect in [(1, 0), (0, 1), (-1, 0), (0, -1)]:
            assert np.any(np.all(np.isclose(pts, expect, atol=1e-12), axis=1))

    def test_diagonal_receptor(self):
        pts = receptor_points((5.0, 5.0), 2.0)
        assert pts[1] == pytest.approx((5 + math.sqrt(2), 5 + math.sqrt(2)), rel=1e-12)

    def test_all_on_circle(self):
        pts = receptor_points((3.0, -2.0), 7.5)
        d = np.hypot(pts[:, 0] - 3.0, pts[:, 1] + 2.0)
        assert np.allclose(d, 7.5, atol=1e-12)

    def test_radius_positive(self):
        with pytest.raises(ValueError):
            receptor_points((0, 0), 0.0)


class TestCumulativeField:
    def test_empty_neighborhood(self):
        state = SwarmState(np.array([[100.0, 100.0], [900.0, 900.0]]), 0)
        assert cumulative_field((100.0, 100.0), 0, state, ELLIPSE, 50.0) == 0.0

    def test_single_neighbor_equals_evaluate(self):
        state = SwarmState(np.array([[100.0, 100.0], [130.0, 140.0]]), 0)
        p = (100.0, 100.0)
        d = math.dist(p, (130.0, 140.0))
        theta = math.atan2(100.0 - 140.0, 100.0 - 130.0) % (2 * math.pi)
        want = fe.evaluate(ELLIPSE, d, theta)
        assert cumulative_field(p, 0, state, ELLIPSE, 100.0) == pytest.approx(want, rel=1e-15)

    def test_additivity(self):
        rng = np.random.default_rng(7)
        pos = rng.uniform(400, 600, (5, 2))
        state = SwarmState(pos, 0)
        p = (500.0, 500.0)
        total = cumulative_field(p, None, state, ELLIPSE, 300.0)
        parts = sum(
            cumulative_field(p, None, SwarmState(pos[i : i + 1], 0), ELLIPSE, 300.0)
            for i in range(5)
        )
        assert total == pytest.approx(parts, abs=1e-12)

    def test_cutoff_is_inclusive(self):
        state = SwarmState(np.array([[0.0, 0.0], [0.0, 10.0]]), 0)
        inside = cumulative_field((0.0, 0.0), 0, state, IDENTITY, 10.0)
        assert inside == 10.0  # d contributes exactly at the cutoff
        outside = cumulative_field((0.0, 0.0), 0, state, IDENTITY, 9.999)
        assert outside == 0.0


class TestGradient:
    def test_equal_receptor_values_cancel(self):
        g = gradient_from_receptor_values(np.full(8, 3.7), radius=5.0)
        assert np.allclose(g, 0.0, atol=1e-15)

    def test_affine_identity_example(self):
        center = np.array([200.0, 300.0])
        pts = receptor_points(center, 5.0)
        vals = 3.0 * pts[:, 0] - 2.0 * pts[:, 1]
        g = gradient_from_receptor_values(vals, radius=5.0)
        assert g == pytest.approx([3.0, -2.0], rel=1e-12)

    def test_unit_affine(self):
        pts = receptor_points((0.0, 0.0), 1.0)
        g = gradient_from_receptor_values(pts[:, 0], radius=1.0)
        assert g == pytest.approx([1.0, 0.0], abs=1e-15)

    def test_random_affine_fields(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            a = rng.normal(size=2)
            b = rng.normal()
            center = rng.uniform(50, 950, 2)
            radius = rng.uniform(0.5, 20)
            pts = receptor_points(center, radius)
            g = gradient_from_receptor_values(pts @ a + b, radius)
            assert np.abs(g - a).max() <= 1e-9 * max(1.0, np.abs(a).max())

    def test_agent_gradient_matches_kernel(self):
        rng = np.random.default_rng(3)
        pos = rng.uniform(50, 950, (40, 2))
        params = SimParams(n=40, steps=1)
        state = SwarmState(pos, 0)
        fast = gradients_all(state, ELLIPSE, params)
        for a in (0, 13, 39):
            ref = gradient(a, state, ELLIPSE, params)
            assert fast[a] == pytest.approx(ref, rel=1e-9, abs=1e-12)


class TestStep:
    def test_single_agent_pure_noise_stays_inside(self):
        params = SimParams(n=1, steps=1, noise_sigma=50.0, seed=9)
        state = SwarmState(np.array([[7.0, 993.0]]), 0)
        for _ in range(20):
            state = step(state, ELLIPSE, params, np.random.default_rng(params.seed))
            assert params.lo <= state.positions[0, 0] <= params.hi
            assert params.lo <= state.positions[0, 1] <= params.hi

    def test_out_of_range_pair_stationary_without_noise(self):
        params = SimParams(n=2, steps=1, noise_sigma=0.0, cutoff=50.0)
        pos = np.array([[100.0, 100.0], [500.0, 500.0]])
        out = step(SwarmState(pos, 0), ELLIPSE, params, np.random.default_rng(0))
        assert np.array_equal(out.positions, pos)
        assert out.step == 1

    def test_same_seed_bitwise_identical(self):
        params = small_params(n=8, noise_sigma=1.0)
        rng = np.random.default_rng(5)
        pos = np.ascontiguousarray(rng.uniform(100, 900, (8, 2)))
        s1 = step(SwarmState(pos, 0), ELLIPSE, params, np.random.default_rng(42))
        s2 = step(SwarmState(pos.copy(), 0), ELLIPSE, params, np.random.default_rng(42))
        assert np.array_equal(s1.positions, s2.positions)

    def test_speed_cap(self):
        # a steep synthetic field cannot move an agent farther than v_max
        params = SimParams(n=2, steps=1, noise_sigma=0.0, gain=1e6, v_max=2.5)
        pos = np.array([[500.0, 500.0], [520.0, 500.0]])
        out = step(SwarmState(pos, 0), ELLIPSE, params, np.random.default_rng(0))
        moved = np.hypot(*(out.positions - pos).T)
        assert np.all(moved <= params.v_max + 1e-9)

    def test_overlap_resolved(self):
        params = SimParams(n=2, steps=1, noise_sigma=0.0, cutoff=30.0)
        pos = np.array([[500.0, 500.0], [510.5, 500.0]])
        out = step(SwarmState(pos, 0), ELLIPSE, params, np.random.default_rng(0))
        d = math.dist(out.positions[0], out.positions[1])
        assert d >= 2 * params.radius - EPS_OVERLAP


class TestRun:
    def test_zero_steps(self):
        ic = np.array([[100.0, 100.0], [200.0, 200.0], [300.0, 300.0]])
        log = run(ic, ELLIPSE, small_params(steps=0))
        assert len(log.records) == 1 and log.records[0][0] == 0
        assert np.array_equal(log.final.positions, ic)

    def test_record_schedule(self):
        ic = np.array([[100.0, 100.0], [200.0, 200.0], [300.0, 300.0]])
        log = run(ic, IDENTITY, small_params(steps=10, record_interval=3))
        assert log.record_steps == [0, 3, 6, 9, 10]
        log = run(ic, IDENTITY, small_params(steps=9, record_interval=3))
        assert log.record_steps == [0, 3, 6, 9]

    def test_counting_contract(self):
        ic = np.array([[100.0, 100.0], [200.0, 200.0], [300.0, 300.0]])
        log = run(ic, IDENTITY, small_params(steps=20, record_interval=2))
        assert len(log.records) == 11

    def test_rejects_overlapping_ic(self):
        ic = np.array([[100.0, 100.0], [104.0, 100.0], [300.0, 300.0]])
        with pytest.raises(ValueError, match="overlap"):
            run(ic, ELLIPSE, small_params())

    def test_rejects_out_of_arena_ic(self):
        ic = np.array([[2.0, 100.0], [200.0, 200.0], [300.0, 300.0]])
        with pytest.raises(ValueError, match="arena"):
            run(ic, ELLIPSE, small_params())

    def test_rejects_wrong_count(self):
        ic = np.array([[100.0, 100.0], [200.0, 200.0]])
        with pytest.raises(ValueError, match="expected 3"):
            run(ic, ELLIPSE, small_params())

    def test_run_determinism(self):
        rng = np.random.default_rng(1)
        ic = rng.uniform(100, 900, (12, 2))
        params = small_params(n=12, steps=30, record_interval=10, noise_sigma=0.5)
        a = run(ic, ELLIPSE, params)
        b = run(ic, ELLIPSE, params)
        assert np.array_equal(a.final.positions, b.final.positions)
        assert a.record_steps == b.record_steps
        for (_, ma), (_, mb) in zip(a.records, b.records):
            assert ma == mb

    def test_invariants_hold_throughout(self):
        rng = np.random.default_rng(4)
        pts = []
        while len(pts) < 40:
            p = rng.uniform(400, 600, 2)
            if all(np.hypot(*(p - q)) >= 10.2 for q in pts):
                pts.append(p)
        ic = np.array(pts)
        params = SimParams(n=40, steps=120, record_interval=40, seed=2, cutoff=80.0)
        log = run(ic, ELLIPSE, params)
        assert log.unresolved == []
        pos = log.final.positions
        assert np.all(pos >= params.lo) and np.all(pos <= params.hi)
        d = np.hypot(pos[:, 0, None] - pos[None, :, 0], pos[:, 1, None] - pos[None, :, 1])
        np.fill_diagonal(d, np.inf)
        assert d.min() >= 2 * params.radius - EPS_OVERLAP

    def test_snapshots_recorded(self):
        ic = np.array([[100.0, 100.0], [200.0, 200.0], [300.0, 300.0]])
        log = run(ic, IDENTITY, small_params(steps=4), snapshot_steps=(0, 2, 4))
        assert [s for s, _ in log.snapshots] == [0, 2, 4]
        assert np.array_equal(log.snapshots[0][1], ic)


class TestHelpers:
    def test_snapshot_schedule(self):
        assert snapshot_schedule(1000, 6) == [0, 200, 400, 600, 800, 1000]
        assert snapshot_schedule(0, 6) == [0]
        assert snapshot_schedule(10, 1) == [10]
        assert snapshot_schedule(10, 0) == []

    def test_validate_ic_slack(self):
        params = SimParams(n=2, steps=1)
        ic = np.array([[4.9999990, 100.0], [200.0, 200.0]])
        with pytest.raises(ValueError):
            validate_ic(ic, params)
        validate_ic(ic, params, slack=2e-6)

    def test_params_validation(self):
        with pytest.raises(ValueError):
            SimParams(n=0)
        with pytest.raises(ValueError):
            SimParams(cutoff=9.0, radius=5.0)
        with pytest.raises(ValueError):
            SimParams(record_interval=0)
