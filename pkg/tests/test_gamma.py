import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alphamatch._pykernels import barycenter_rows as py_barycenter_rows
from alphamatch.errors import DomainError, OracleConvergenceError
from alphamatch.gamma import (
    WeightedEnsemble,
    barycenter_objective,
    barycenter_oracle,
    beta_weights,
    gamma_update,
    power_mean,
    project_simplex,
    weighted_alpha_barycenter,
)
from alphamatch.verification import random_simplex


def random_ensemble(rng, K, n_members):
    return WeightedEnsemble(random_simplex(rng, K, n_members), rng.dirichlet(np.ones(n_members)))


class TestBetaWeights:
    def test_default(self):
        np.testing.assert_array_equal(beta_weights(1, 0.5), [0.5, 0.5])

    def test_even_split(self):
        np.testing.assert_allclose(beta_weights(4, 0.8), [0.2] * 5, rtol=1e-15)

    def test_beta_zero(self):
        np.testing.assert_array_equal(beta_weights(3, 0.0), [1, 0, 0, 0])

    @pytest.mark.parametrize("n,beta", [(1, -0.1), (1, 1.5), (0, 0.5)])
    def test_rejects(self, n, beta):
        with pytest.raises(DomainError):
            beta_weights(n, beta)


class TestEnsemble:
    def test_empty(self):
        with pytest.raises(DomainError):
            WeightedEnsemble(np.zeros((0, 2)), np.zeros(0))

    def test_bad_weights(self):
        with pytest.raises(DomainError):
            WeightedEnsemble([[0.5, 0.5], [0.2, 0.8]], [0.7, 0.7])


class TestClosedForm:
    def test_single_member(self):
        ens = WeightedEnsemble([[0.3, 0.2, 0.5]], [1.0])
        for a in (0.5, 1.0, 2.0, 8.0):
            np.testing.assert_array_equal(weighted_alpha_barycenter(ens, a), [0.3, 0.2, 0.5])

    def test_symmetric_pair(self):
        # harmonic mean 1/(0.5/0.8 + 0.5/0.2) = 0.32 in both classes
        ens = WeightedEnsemble([[0.8, 0.2], [0.2, 0.8]], [0.5, 0.5])
        np.testing.assert_allclose(weighted_alpha_barycenter(ens, 2.0), [0.5, 0.5], atol=1e-15)
        np.testing.assert_allclose(barycenter_oracle(ens, 2.0), [0.5, 0.5], atol=1e-4)

    def test_harmonic_example(self):
        ens = WeightedEnsemble([[0.9, 0.1], [0.5, 0.5]], [0.5, 0.5])
        expect = np.array([1 / (0.5 / 0.9 + 0.5 / 0.5), 1 / (0.5 / 0.1 + 0.5 / 0.5)])
        expect /= expect.sum()
        np.testing.assert_allclose(expect, [0.79412, 0.20588], atol=5e-6)
        np.testing.assert_allclose(weighted_alpha_barycenter(ens, 2.0), expect, atol=1e-14)
        np.testing.assert_allclose(barycenter_oracle(ens, 2.0), expect, atol=1e-4)

    def test_gamma_update_regression(self):
        # frozen from barycenter_oracle(grid_step=1e-6) before the closed form was trusted
        got = gamma_update([0.9, 0.1], [[0.5, 0.5]], 1.5, 0.5)
        np.testing.assert_allclose(got, [0.774658, 0.225342], atol=2e-6)

    def test_gamma_update_matches_barycenter(self):
        got = gamma_update([0.8, 0.2], [[0.2, 0.8]], 2.0, 0.5)
        np.testing.assert_allclose(got, [0.5, 0.5], atol=1e-15)

    def test_beta_zero_returns_clean_exactly(self, rng):
        p = random_simplex(rng, 4)
        augs = random_simplex(rng, 4, 3)
        for a in (0.5, 1.0, 1.5, 4.0):
            assert np.array_equal(gamma_update(p, augs, a, 0.0), p)

    def test_rejects_bad_alpha(self):
        ens = WeightedEnsemble([[0.5, 0.5]], [1.0])
        with pytest.raises(DomainError):
            weighted_alpha_barycenter(ens, 0.0)

    def test_python_kernel_agrees(self, rng):
        P3 = np.stack([random_simplex(rng, 3, 3) for _ in range(20)])
        w = np.array([0.5, 0.25, 0.25])
        for a in (1e-6, 0.5, 1.0, 1.5, 4.0, 50.0):
            ours = np.stack(
                [weighted_alpha_barycenter(WeightedEnsemble(P, w), a) for P in P3]
            )
            np.testing.assert_allclose(ours, py_barycenter_rows(P3, w, a), rtol=1e-12, atol=1e-15)


class TestLimits:
    def test_arithmetic_mean(self, rng):
        ens = random_ensemble(rng, 4, 3)
        mean = ens.weights @ ens.members
        np.testing.assert_allclose(weighted_alpha_barycenter(ens, 1e-6), mean / mean.sum(), atol=1e-5)

    def test_geometric_mean(self, rng):
        ens = random_ensemble(rng, 4, 3)
        geo = np.exp(ens.weights @ np.log(ens.members))
        np.testing.assert_allclose(weighted_alpha_barycenter(ens, 1.0), geo / geo.sum(), atol=1e-10)

    def test_min_tending(self, rng):
        for _ in range(20):
            ens = random_ensemble(rng, 3, 3)
            lo = ens.members.min(axis=0)
            w_min = ens.weights[np.argmin(ens.members, axis=0)]
            # power mean of order 1 - alpha sits in [min, min * w^(-1/(alpha-1))]
            for a in (50.0, 1000.0):
                pm = power_mean(ens.members, ens.weights, a)
                assert np.all(pm >= lo * (1 - 1e-12))
                assert np.all(pm <= lo * w_min ** (-1.0 / (a - 1.0)) * (1 + 1e-12))
            if ens.weights.min() > 0.05:
                pm = power_mean(ens.members, ens.weights, 5000.0)
                np.testing.assert_allclose(pm, lo, rtol=1e-3)

    def test_idempotent(self, rng):
        p = random_simplex(rng, 5)
        ens = WeightedEnsemble(np.vstack([p, p, p]), [0.2, 0.3, 0.5])
        for a in (1e-5, 0.5, 1.0, 2.0, 10.0):
            np.testing.assert_allclose(weighted_alpha_barycenter(ens, a), p, rtol=1e-12)


class TestEquivariance:
    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000), st.sampled_from([0.5, 1.0, 1.5, 4.0]))
    def test_class_and_member_permutations(self, seed, alpha):
        rng = np.random.default_rng(seed)
        ens = random_ensemble(rng, 4, 3)
        base = weighted_alpha_barycenter(ens, alpha)
        cls = rng.permutation(4)
        mem = rng.permutation(3)
        moved = WeightedEnsemble(ens.members[mem][:, cls], ens.weights[mem])
        np.testing.assert_allclose(weighted_alpha_barycenter(moved, alpha), base[cls], rtol=1e-12)


class TestOracle:
    def test_single_member(self):
        ens = WeightedEnsemble([[0.3, 0.2, 0.5]], [1.0])
        got = barycenter_oracle(ens, 1.5)
        np.testing.assert_allclose(got, [0.3, 0.2, 0.5], atol=1e-6)
        assert barycenter_objective(got, ens, 1.5) == pytest.approx(0.0, abs=1e-10)

    @pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5, 2.0, 4.0])
    def test_optimality_three_classes(self, rng, alpha):
        for _ in range(10):
            ens = random_ensemble(rng, 3, 3)
            closed = weighted_alpha_barycenter(ens, alpha)
            oracle = barycenter_oracle(ens, alpha)
            np.testing.assert_allclose(closed, oracle, atol=1e-4)
            assert barycenter_objective(closed, ens, alpha) <= barycenter_objective(oracle, ens, alpha) + 1e-8

    def test_closed_form_beats_perturbations(self, rng):
        ens = random_ensemble(rng, 4, 2)
        closed = weighted_alpha_barycenter(ens, 2.0)
        f = barycenter_objective(closed, ens, 2.0)
        for _ in range(50):
            other = project_simplex(closed + 1e-3 * rng.normal(size=4), 1e-8)
            assert barycenter_objective(other, ens, 2.0) >= f - 1e-12

    def test_iteration_cap_reports_best(self, rng):
        ens = random_ensemble(rng, 4, 3)
        with pytest.raises(OracleConvergenceError) as info:
            barycenter_oracle(ens, 2.0, tol=0.0, max_iter=3)
        assert info.value.best.shape == (4,)

    def test_rejects_many_classes(self):
        ens = WeightedEnsemble([np.full(7, 1 / 7)], [1.0])
        with pytest.raises(DomainError):
            barycenter_oracle(ens, 2.0)


class TestProjection:
    def test_feasible_point_is_fixed(self):
        x = np.array([0.2, 0.3, 0.5])
        np.testing.assert_allclose(project_simplex(x), x)

    def test_lower_bound(self, rng):
        for _ in range(20):
            y = rng.normal(size=5)
            x = project_simplex(y, 1e-3)
            assert abs(x.sum() - 1) < 1e-12 and np.all(x >= 1e-3 - 1e-15)
