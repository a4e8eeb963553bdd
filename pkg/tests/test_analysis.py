import numpy as np
import pytest

from morphoswarm import analysis, initcond
from morphoswarm.analysis import (
    ClassMomentStats,
    ExperimentConfig,
    class_moment_stats,
    classify,
    cluster_count,
    distinguishing_moment,
    experiment,
)
from morphoswarm.initcond import ConstraintSpec
from morphoswarm.moments import MomentVector
from morphoswarm.sim import RunLog, SimParams


def clump(cx, cy, k=10, spread=3.0, seed=0):
    rng = np.random.default_rng(seed)
    return rng.uniform(-spread, spread, (k, 2)) + np.array([cx, cy])


def bfs_components(positions, link):
    """Transitive-closure oracle for cluster counting."""
    n = len(positions)
    seen = [False] * n
    comps = 0
    adj = (
        np.hypot(
            positions[:, 0, None] - positions[None, :, 0],
            positions[:, 1, None] - positions[None, :, 1],
        )
        <= link
    )
    for s in range(n):
        if seen[s]:
            continue
        comps += 1
        stack = [s]
        seen[s] = True
        while stack:
            v = stack.pop()
            for w in np.flatnonzero(adj[v]):
                if not seen[w]:
                    seen[w] = True
                    stack.append(int(w))
    return comps


class TestClusterCount:
    def test_three_separated_clumps(self):
        pts = np.vstack([clump(100, 100), clump(500, 500), clump(900, 100)])
        assert cluster_count(pts, 11.0) == 3

    def test_single_chain(self):
        pts = np.column_stack([np.arange(0, 100, 8.0) + 100, np.full(13, 500.0)])
        assert cluster_count(pts, 8.0) == 1

    def test_matches_transitive_closure_oracle(self):
        rng = np.random.default_rng(5)
        for trial in range(60):
            pts = rng.uniform(0, 300, (50, 2))
            link = float(rng.uniform(5, 60))
            assert cluster_count(pts, link) == bfs_components(pts, link), trial

    def test_monotone_in_link_distance(self):
        rng = np.random.default_rng(8)
        pts = rng.uniform(0, 500, (80, 2))
        counts = [cluster_count(pts, link) for link in (5, 15, 40, 90, 200)]
        assert counts == sorted(counts, reverse=True)

    def test_invalid_link(self):
        with pytest.raises(ValueError):
            cluster_count(np.zeros((2, 2)), 0.0)


class TestClassify:
    def test_quartermoon_bands(self):
        # left-pointing at skew -0.17: three-point set with skew ~ -0.17 is
        # fiddly, use a planted asymmetric set and check the label logic via
        # the returned skew
        x = np.array([0.0, 0.0, 0.0, 1.0]) * 100 + 400  # skew +1.1547
        pts = np.column_stack([x, np.linspace(400, 600, 4)])
        lab = classify(pts, "quartermoon")
        assert lab.label == "right-pointing"
        lab = classify(np.column_stack([-x + 1000, np.linspace(400, 600, 4)]), "quartermoon")
        assert lab.label == "left-pointing"

    def test_quartermoon_indeterminate_band(self):
        pts = np.column_stack([np.linspace(400, 600, 10), np.linspace(400, 600, 10)])
        lab = classify(pts, "quartermoon")
        assert lab.label == "indeterminate"
        assert abs(lab.skew_x) < 0.15

    def test_ellipse_labels(self):
        one = clump(500, 500, k=20, spread=20.0)
        assert classify(one, "ellipse", link_distance=50.0).label == "single-ellipse"
        two = np.vstack([clump(200, 200, k=10), clump(800, 800, k=10)])
        assert classify(two, "ellipse").label == "two-ellipses"
        four = np.vstack(
            [clump(150, 150), clump(850, 850), clump(150, 850), clump(850, 150)]
        )
        assert classify(four, "ellipse").label == "other"

    def test_discs_label_is_count(self):
        four = np.vstack(
            [clump(150, 150), clump(850, 850), clump(150, 850), clump(850, 150)]
        )
        lab = classify(four, "discs")
        assert lab.label == "4-discs"
        assert lab.clusters == 4

    def test_lines_labels(self):
        assert classify(clump(500, 500, k=30, spread=10.0), "lines").label == "one-line"
        two = np.vstack([clump(300, 500, k=15), clump(700, 500, k=15)])
        assert classify(two, "lines").label == "two-lines"
        three = np.vstack([clump(200, 200), clump(500, 500), clump(800, 800)])
        assert classify(three, "lines").label == "indeterminate"

    def test_order_invariance(self):
        pts = np.vstack([clump(200, 200), clump(800, 800)])
        a = classify(pts, "discs")
        b = classify(pts[::-1], "discs")
        assert a.label == b.label

    def test_unknown_family(self):
        with pytest.raises(ValueError):
            classify(np.zeros((3, 2)), "triangle")


def _mk_log(tracks):
    return RunLog(records=[(s, MomentVector.from_array(a)) for s, a in tracks])


def _const_log(value, steps=(0, 100, 200)):
    return _mk_log([(s, np.full(8, float(value))) for s in steps])


class TestClassMomentStats:
    def test_identical_logs_zero_std(self):
        logs = [_const_log(2.0), _const_log(2.0)]
        stats = class_moment_stats(logs, ["a", "a"])
        assert np.all(stats.std["a"] == 0.0)
        assert np.all(stats.mean["a"] == 2.0)

    def test_matches_hand_computation(self):
        rng = np.random.default_rng(0)
        tracks = [rng.uniform(0, 10, (3, 8)) for _ in range(3)]
        logs = [_mk_log(list(zip((0, 50, 100), t))) for t in tracks]
        stats = class_moment_stats(logs, ["c", "c", "c"])
        stack = np.stack(tracks)
        assert np.allclose(stats.mean["c"], stack.mean(axis=0), rtol=1e-12)
        assert np.allclose(stats.std["c"], stack.std(axis=0), rtol=1e-12)

    def test_requires_two_members(self):
        with pytest.raises(ValueError, match="fewer than 2"):
            class_moment_stats([_const_log(1), _const_log(1)], ["a", "b"])

    def test_mismatched_schedules(self):
        with pytest.raises(ValueError, match="mismatched"):
            class_moment_stats(
                [_const_log(1), _const_log(1, steps=(0, 50))], ["a", "a"]
            )

    def test_rows_schema(self):
        stats = class_moment_stats([_const_log(1), _const_log(1)], ["a", "a"])
        rows = list(stats.rows())
        assert len(rows) == 3 * 8
        assert rows[0][:3] == (0, "M1x", "a")


def _planted_stats(separated_channel=4, gap=10.0):
    """Two classes, identical everywhere except one separated channel."""
    steps = [0, 100]
    mean_a = np.ones((2, 8))
    mean_b = np.ones((2, 8))
    mean_b[:, separated_channel] += gap
    std = np.full((2, 8), 0.5)
    return ClassMomentStats(steps, ["a", "b"], {"a": mean_a, "b": mean_b},
                            {"a": std.copy(), "b": std.copy()})


class TestDistinguishingMoment:
    def test_planted_channel_found(self):
        # channel index 4 is M3x
        axis, moment, score = distinguishing_moment(_planted_stats(4))
        assert (axis, moment) == ("x", 3)
        assert score > 0

    def test_identical_classes_score_nonpositive(self):
        stats = _planted_stats(4, gap=0.0)
        _, _, score = distinguishing_moment(stats)
        assert score <= 0

    def test_symmetric_under_relabeling(self):
        s1 = _planted_stats(3)
        s2 = ClassMomentStats(
            s1.steps, ["a", "b"], {"a": s1.mean["b"], "b": s1.mean["a"]},
            {"a": s1.std["b"], "b": s1.std["a"]},
        )
        assert distinguishing_moment(s1) == distinguishing_moment(s2)

    def test_tie_breaks_to_lower_moment_and_x(self):
        stats = _planted_stats(0, gap=5.0)
        stats.mean["b"][:, 1] += 5.0  # same gap on M1y; M1x should win
        axis, moment, _ = distinguishing_moment(stats)
        assert (axis, moment) == ("x", 1)

    def test_requires_two_classes(self):
        stats = class_moment_stats([_const_log(1), _const_log(1)], ["a", "a"])
        with pytest.raises(ValueError):
            distinguishing_moment(stats)


class TestExperiment:
    PARAMS = SimParams(n=24, steps=15, record_interval=5, cutoff=40.0)

    def test_partition_and_percentages(self):
        cfg = ExperimentConfig("discs", self.PARAMS, seeds=(1, 2, 3))
        res = experiment(cfg)
        assert len(res.outcomes) == 3
        assert sum(res.counts.values()) == 3
        assert sum(res.percentages.values()) == pytest.approx(100.0)
        assert not res.failures

    def test_seed_reproducibility(self):
        cfg = ExperimentConfig("discs", self.PARAMS, seeds=(4, 5))
        a = experiment(cfg)
        b = experiment(cfg)
        assert a.counts == b.counts
        for oa, ob in zip(a.outcomes, b.outcomes):
            assert np.array_equal(oa.log.final.positions, ob.log.final.positions)

    def test_biased_ic_respected(self):
        spec = ConstraintSpec("x", 2, lower=0.0)  # vacuous, fast
        cfg = ExperimentConfig("discs", self.PARAMS, seeds=(7,), constraint=spec)
        res = experiment(cfg)
        assert res.outcomes[0].error is None

    def test_failed_run_recorded(self, monkeypatch):
        def boom(*args, **kwargs):
            raise initcond.GenerationError("nope")

        monkeypatch.setattr(analysis.initcond, "uniform_ic", boom)
        cfg = ExperimentConfig("discs", self.PARAMS, seeds=(1, 2))
        res = experiment(cfg)
        assert len(res.failures) == 2
        assert res.counts == {}

    def test_empty_seeds_rejected(self):
        with pytest.raises(ValueError):
            experiment(ExperimentConfig("discs", self.PARAMS, seeds=()))
