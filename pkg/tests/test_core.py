import numpy as np
import pytest

from trustbandit import (
    ArmDataset,
    ArmStats,
    ImprovementVector,
    StochasticPolicy,
    compute_stats,
    policy_value_empirical,
    reference_policy,
)


def make_dataset(samples: dict[str, list[float]]) -> ArmDataset:
    return ArmDataset(tuple(samples), tuple(np.array(v, dtype=float) for v in samples.values()))


class TestArmDataset:
    def test_groups_and_preserves_first_seen_order(self):
        data = ArmDataset.from_pulls(["b", "a", "b", "c"], [1.0, 2.0, 3.0, 4.0])
        assert data.arms == ("b", "a", "c")
        assert data.rewards[0].tolist() == [1.0, 3.0]
        assert data.rewards[1].tolist() == [2.0]
        assert data.n_arms == 3

    def test_rejects_empty_arm(self):
        with pytest.raises(ValueError, match="no samples"):
            ArmDataset(("a",), (np.array([]),))

    def test_rejects_duplicate_labels(self):
        with pytest.raises(ValueError, match="unique"):
            ArmDataset(("a", "a"), (np.array([1.0]), np.array([2.0])))

    def test_rejects_non_finite_reward(self):
        with pytest.raises(ValueError, match="non-finite"):
            make_dataset({"a": [1.0, np.nan]})

    def test_rejects_length_mismatch(self):
        with pytest.raises(ValueError, match="align"):
            ArmDataset(("a", "b"), (np.array([1.0]),))

    def test_rewards_are_read_only(self):
        data = make_dataset({"a": [1.0]})
        with pytest.raises(ValueError):
            data.rewards[0][0] = 2.0


class TestComputeStats:
    def test_means_and_counts(self):
        # arm A has two samples averaging 2.0, arm B a single 2.0
        data = make_dataset({"A": [1.0, 3.0], "B": [2.0]})
        stats = compute_stats(data, sigma=1.0)
        assert stats.n.tolist() == [2, 1]
        assert stats.r_hat.tolist() == [2.0, 2.0]
        assert stats.sigma.tolist() == [1.0, 1.0]

    def test_single_arm_bounded_mode(self):
        stats = compute_stats(make_dataset({"a": [0.5]}))
        assert stats.r_hat.tolist() == [0.5]
        assert stats.sigma.tolist() == [0.5]

    def test_per_arm_sigma_sequence(self):
        data = make_dataset({"a": [1.0], "b": [2.0]})
        stats = compute_stats(data, sigma=[1.0, 2.0])
        assert stats.sigma.tolist() == [1.0, 2.0]
        with pytest.raises(ValueError, match="one entry per arm"):
            compute_stats(data, sigma=[1.0, 2.0, 3.0])

    def test_empirical_std_uses_ddof_1(self):
        data = make_dataset({"a": [0.0, 2.0], "b": [5.0]})
        stats = compute_stats(data, sigma="empirical_std")
        expected = np.std([0.0, 2.0], ddof=1)
        assert stats.sigma[0] == pytest.approx(expected)
        # single-sample arm inherits the largest multi-sample std
        assert stats.sigma[1] == pytest.approx(expected)

    def test_empirical_std_requires_a_multi_sample_arm(self):
        data = make_dataset({"a": [1.0], "b": [2.0]})
        with pytest.raises(ValueError, match="two samples"):
            compute_stats(data, sigma="empirical_std")

    def test_empirical_std_rejects_constant_samples(self):
        data = make_dataset({"a": [1.0, 1.0]})
        with pytest.raises(ValueError, match="zero scale"):
            compute_stats(data, sigma="empirical_std")

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError, match="unknown sigma mode"):
            compute_stats(make_dataset({"a": [1.0]}), sigma="guess")

    def test_nonpositive_sigma_rejected(self):
        with pytest.raises(ValueError, match="positive"):
            compute_stats(make_dataset({"a": [1.0]}), sigma=0.0)

    def test_data_starved_good_arm_means(self):
        # 5000 uniform(0.5, 1.5) samples average out near 1
        from trustbandit import gen_data_starved

        _, data = gen_data_starved(10000, seed=2023)
        stats = compute_stats(data, sigma=0.5)
        good = stats.r_hat[:5000]
        assert abs(good.mean() - 1.0) <= 0.02
        assert np.all(stats.n == 1)


class TestArmStatsValidation:
    def test_rejects_zero_count(self):
        with pytest.raises(ValueError, match="at least one sample"):
            ArmStats(("a",), np.array([0]), np.array([1.0]), np.array([1.0]))

    def test_rejects_bad_sigma(self):
        with pytest.raises(ValueError, match="sigma"):
            ArmStats(("a",), np.array([1]), np.array([1.0]), np.array([0.0]))

    def test_variance_weights(self):
        stats = ArmStats(("a", "b"), np.array([4, 1]), np.zeros(2), np.array([1.0, 2.0]))
        assert stats.variance_weights.tolist() == [0.25, 4.0]

    def test_fingerprint_sensitivity(self):
        base = ArmStats(("a", "b"), np.array([1, 1]), np.array([1.0, 2.0]), np.ones(2))
        same = ArmStats(("a", "b"), np.array([1, 1]), np.array([1.0, 2.0]), np.ones(2))
        other = ArmStats(("a", "b"), np.array([1, 1]), np.array([1.0, 2.5]), np.ones(2))
        assert base.fingerprint() == same.fingerprint()
        assert base.fingerprint() != other.fingerprint()


class TestPolicies:
    def test_simplex_validation(self):
        StochasticPolicy(np.array([0.5, 0.5]))
        with pytest.raises(ValueError, match="sum to 1"):
            StochasticPolicy(np.array([0.5, 0.6]))
        with pytest.raises(ValueError, match="negative"):
            StochasticPolicy(np.array([1.5, -0.5]))

    def test_improvement_vector_sums_to_zero(self):
        ImprovementVector(np.array([0.25, -0.25]), eps_used=0.1)
        with pytest.raises(ValueError, match="sum to zero"):
            ImprovementVector(np.array([0.25, 0.25]), eps_used=0.1)
        with pytest.raises(ValueError, match="nonnegative"):
            ImprovementVector(np.array([0.0, 0.0]), eps_used=-1.0)


class TestReferencePolicy:
    def test_uniform_for_equal_counts_and_scales(self):
        stats = ArmStats(("a", "b", "c", "d"), np.ones(4, int), np.zeros(4), np.ones(4))
        assert reference_policy(stats).weights.tolist() == [0.25] * 4

    def test_precision_weighting(self):
        stats = ArmStats(("a", "b"), np.array([1, 1]), np.zeros(2), np.array([1.0, 2.0]))
        w = reference_policy(stats).weights
        assert w == pytest.approx([0.8, 0.2])

    def test_count_weighting(self):
        stats = ArmStats(("a", "b"), np.array([3, 1]), np.zeros(2), np.ones(2))
        w = reference_policy(stats).weights
        assert w == pytest.approx([0.75, 0.25])


class TestPolicyValue:
    def test_vertex(self):
        stats = ArmStats(("a", "b"), np.ones(2, int), np.array([0.3, 0.9]), np.ones(2))
        assert policy_value_empirical(StochasticPolicy(np.array([1.0, 0.0])), stats) == 0.3

    def test_midpoint(self):
        stats = ArmStats(("a", "b"), np.ones(2, int), np.array([0.0, 1.0]), np.ones(2))
        assert policy_value_empirical(StochasticPolicy(np.array([0.5, 0.5])), stats) == 0.5

    def test_uniform_mean(self):
        stats = ArmStats(
            ("a", "b", "c", "d"), np.ones(4, int), np.array([1.0, 2.0, 3.0, 4.0]), np.ones(4)
        )
        assert policy_value_empirical(StochasticPolicy(np.full(4, 0.25)), stats) == 2.5

    def test_dimension_mismatch(self):
        stats = ArmStats(("a",), np.array([1]), np.array([1.0]), np.array([1.0]))
        with pytest.raises(ValueError, match="different numbers"):
            policy_value_empirical(StochasticPolicy(np.array([0.5, 0.5])), stats)
