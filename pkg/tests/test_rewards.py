"""Feature sets, reward parameterization and trajectory functionals."""

import numpy as np
import pytest

from maxent_irl import (Dataset, FeatureSet, RewardParams, RewardTables,
                        discount_weights, empirical_expectations,
                        make_linear_chain, pad_reward_tables, reward_tables,
                        traj_features, traj_reward)


class TestFeatureSet:
    def test_state_indicators(self):
        feats = FeatureSet.state_indicators(3, 2)
        assert feats.dims == (3, 0, 0)
        np.testing.assert_array_equal(feats.phi_s, np.eye(3))
        assert feats.num_states == 3 and feats.num_actions == 2

    def test_state_action_indicators(self):
        feats = FeatureSet.state_action_indicators(3, 2)
        assert feats.dims == (0, 6, 0)
        # (s, a) pair (1, 0) lights coordinate 2 in row-major order
        assert feats.phi_sa[1, 0, 2] == 1.0
        assert feats.phi_sa[1, 0].sum() == 1.0

    def test_from_arrays_shape_check(self):
        with pytest.raises(ValueError, match="phi_s"):
            FeatureSet.from_arrays(3, 2, phi_s=np.eye(4))

    def test_from_arrays_rejects_nan(self):
        phi = np.eye(3)
        phi[0, 0] = np.nan
        with pytest.raises(ValueError, match="finite"):
            FeatureSet.from_arrays(3, 2, phi_s=phi)


class TestRewardParams:
    def test_vector_round_trip(self):
        feats = FeatureSet.from_arrays(
            2, 2, phi_s=np.eye(2), phi_sa=np.ones((2, 2, 3)))
        vec = np.arange(5, dtype=float)
        params = RewardParams.from_vector(vec, feats)
        np.testing.assert_array_equal(params.theta_s, [0.0, 1.0])
        np.testing.assert_array_equal(params.theta_sa, [2.0, 3.0, 4.0])
        np.testing.assert_array_equal(params.to_vector(), vec)

    def test_from_vector_length_check(self):
        feats = FeatureSet.state_indicators(3, 1)
        with pytest.raises(ValueError, match="length 3"):
            RewardParams.from_vector(np.zeros(4), feats)

    def test_zeros(self):
        feats = FeatureSet.state_action_indicators(2, 2)
        params = RewardParams.zeros(feats)
        assert params.theta_sa.shape == (4,)
        assert params.to_vector().sum() == 0.0

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError, match="finite"):
            RewardParams(np.array([np.inf]), np.zeros(0), np.zeros(0))


class TestTables:
    def test_contraction(self):
        feats = FeatureSet.state_indicators(3, 1)
        params = RewardParams(np.array([1.0, -2.0, 0.5]), np.zeros(0),
                              np.zeros(0))
        tables = reward_tables(feats, params)
        np.testing.assert_allclose(tables.r_s, [1.0, -2.0, 0.5])
        assert tables.r_sa.shape == (3, 1)
        assert np.all(tables.r_sa == 0.0)

    def test_discount_weights(self):
        np.testing.assert_allclose(discount_weights(0.5, 4),
                                   [1.0, 0.5, 0.25, 0.125])
        np.testing.assert_allclose(discount_weights(1.0, 3), np.ones(3))


class TestTrajectoryFunctionals:
    def setup_method(self):
        self.feats = FeatureSet.from_arrays(
            3, 2,
            phi_s=np.eye(3),
            phi_sa=np.arange(12, dtype=float).reshape(3, 2, 2),
            phi_sas=np.ones((3, 2, 3, 1)),
        )
        self.traj = ((0, 1), (2, 0), (1, None))

    def test_traj_features_undiscounted(self):
        f_s, f_sa, f_sas = traj_features(self.traj, self.feats, 1.0)
        np.testing.assert_allclose(f_s, [1.0, 1.0, 1.0])
        # phi_sa rows: (0,1) -> [2,3]; (2,0) -> [8,9]
        np.testing.assert_allclose(f_sa, [10.0, 12.0])
        np.testing.assert_allclose(f_sas, [2.0])

    def test_traj_features_discounted(self):
        g = 0.5
        f_s, f_sa, f_sas = traj_features(self.traj, self.feats, g)
        np.testing.assert_allclose(f_s, [1.0, 0.25, 0.5])
        np.testing.assert_allclose(f_sa, [2.0 + g * 8.0, 3.0 + g * 9.0])
        np.testing.assert_allclose(f_sas, [1.5])

    def test_traj_reward_matches_feature_dot(self):
        rng = np.random.default_rng(0)
        params = RewardParams(rng.standard_normal(3), rng.standard_normal(2),
                              rng.standard_normal(1))
        got = traj_reward(self.traj, self.feats, params, 0.9)
        f = traj_features(self.traj, self.feats, 0.9)
        want = sum(th @ fi for th, fi in
                   zip((params.theta_s, params.theta_sa, params.theta_sas), f))
        assert got == pytest.approx(want)

    def test_empirical_expectations_mean(self):
        data = Dataset.from_trajectories([self.traj, ((1, None),)])
        f_s, f_sa, f_sas = empirical_expectations(data, self.feats, 1.0)
        np.testing.assert_allclose(f_s, [0.5, 1.0, 0.5])
        np.testing.assert_allclose(f_sa, [5.0, 6.0])
        np.testing.assert_allclose(f_sas, [1.0])


class TestPaddedReward:
    def test_structure(self):
        mdp, feats, gt = make_linear_chain()
        base = reward_tables(feats, gt)
        pr = pad_reward_tables(base, mdp)
        n, m = mdp.num_states, mdp.num_actions
        assert pr.aux_state == n and pr.aux_action == m
        # original state rewards survive, including at the terminal state
        np.testing.assert_array_equal(pr.r_s[:n], base.r_s)
        assert pr.r_s[n] == 0.0
        # the aux action is free everywhere
        assert np.all(pr.r_sa[:, m] == 0.0)
        assert np.all(pr.r_sas[:, m, n] == 0.0)
        # real actions at the (formerly) terminal state are erased
        assert np.all(np.isneginf(pr.r_sa[n - 1, :m]))
        # escaping the aux state via a real action is erased
        assert np.all(np.isneginf(pr.r_sa[n, :m]))
        # the aux action cannot lead anywhere but the aux state
        assert np.all(np.isneginf(pr.r_sas[:, m, :n]))

    def test_live_block_copied(self):
        mdp, feats, _ = make_linear_chain()
        rng = np.random.default_rng(5)
        base = RewardTables(rng.standard_normal(4),
                            rng.standard_normal((4, 1)),
                            rng.standard_normal((4, 1, 4)))
        pr = pad_reward_tables(base, mdp)
        for s in range(3):  # live states only; 3 is terminal
            np.testing.assert_array_equal(pr.r_sa[s, :1], base.r_sa[s])
            np.testing.assert_array_equal(pr.r_sas[s, :1, :4],
                                          base.r_sas[s])
