import numpy as np
import pytest

from admglearn.graphs import Admg
from admglearn.ricf import regularized_ricf
from admglearn.scores import ScoreConfig, abic, bic, count_nonzero_params
from admglearn.sem import Dataset, SemParams, gaussian_neg2_loglik, sample_data


def _dataset(rng, n=400):
    delta = np.zeros((4, 4))
    delta[0, 2] = 0.9
    delta[1, 3] = -1.2
    beta = np.eye(4)
    beta[2, 3] = beta[3, 2] = 0.5
    return sample_data(SemParams(delta, beta), n, rng, names=list("ABCD"))


class TestCounting:
    def test_ties_counted_once_and_diagonal_always(self):
        delta = np.zeros((3, 3))
        delta[0, 1] = 0.4
        beta = np.eye(3)
        beta[0, 2] = beta[2, 0] = 0.3
        p = SemParams(delta, beta)
        # one coefficient + one tied covariance + three variances
        assert count_nonzero_params(p, zero_tol=0.05) == 5

    def test_threshold_is_strict(self):
        delta = np.zeros((2, 2))
        delta[0, 1] = 0.05
        p = SemParams(delta, np.eye(2))
        assert count_nonzero_params(p, zero_tol=0.05) == 2
        assert count_nonzero_params(p, zero_tol=0.049) == 3


class TestBic:
    def test_scalar_closed_form(self, rng):
        data = sample_data(SemParams(np.zeros((1, 1)), [[1.3]]), 700, rng)
        s2 = data.cov[0, 0]
        p = SemParams(np.zeros((1, 1)), [[s2]])
        expect = data.n * (np.log(2 * np.pi * s2) + 1) + np.log(data.n) * 1
        assert bic(data, p) == pytest.approx(expect)

    def test_exact_zeros_do_not_change_score(self, rng):
        data = _dataset(rng)
        delta = np.zeros((4, 4))
        delta[0, 2] = 0.9
        p = SemParams(delta, np.eye(4))
        padded = SemParams(delta + 0.0, np.eye(4))  # identical values
        assert bic(data, p) == bic(data, padded)

    def test_label_permutation_invariance(self, rng):
        data = _dataset(rng)
        delta = np.zeros((4, 4))
        delta[0, 2] = 0.8
        beta = np.eye(4)
        beta[2, 3] = beta[3, 2] = 0.4
        p = SemParams(delta, beta)
        perm = np.array([2, 0, 3, 1])
        data_p = Dataset(data.X[:, perm], [data.names[k] for k in perm])
        p_p = SemParams(p.delta[np.ix_(perm, perm)], p.beta[np.ix_(perm, perm)])
        assert bic(data, p) == pytest.approx(bic(data_p, p_p), rel=1e-12)


class TestAbic:
    def test_diagonal_only_penalty(self, rng):
        data = _dataset(rng)
        beta = np.diag([1.0, 2.0, 0.5, 1.5])
        p = SemParams(np.zeros((4, 4)), beta)
        cfg = ScoreConfig(lam=0.3, c_sharpness=2.0)
        expect = gaussian_neg2_loglik(data, p) + 0.3 * np.tanh(
            2.0 * np.diag(beta)
        ).sum()
        assert abic(data, p, cfg) == pytest.approx(expect)

    def test_lambda_zero_equals_loglik(self, rng):
        data = _dataset(rng)
        p = SemParams(np.zeros((4, 4)), np.eye(4))
        assert abic(data, p, ScoreConfig(lam=0.0)) == pytest.approx(
            gaussian_neg2_loglik(data, p)
        )

    def test_saturating_penalty(self, rng):
        data = _dataset(rng)
        big = 50.0
        delta = np.full((4, 4), big)
        np.fill_diagonal(delta, 0.0)
        beta = np.full((4, 4), big)
        np.fill_diagonal(beta, 4 * big + 1.0)
        p = SemParams(delta, beta)
        cfg = ScoreConfig(lam=0.7, c_sharpness=5.0)
        dim = 4 * 3 + 6 + 4
        penalty = abic(data, p, cfg) - gaussian_neg2_loglik(data, p)
        assert penalty == pytest.approx(0.7 * dim, rel=1e-6)

    def test_converges_to_l0_as_sharpness_grows(self, rng):
        data = _dataset(rng)
        delta = np.zeros((4, 4))
        delta[0, 2] = 0.9
        beta = np.eye(4)
        beta[2, 3] = beta[3, 2] = 0.5
        p = SemParams(delta, beta)
        lam = 0.4
        target = gaussian_neg2_loglik(data, p) + lam * count_nonzero_params(p, 0.0)
        gaps = []
        for c in (10.0, 1e3, 1e6):
            value = abic(data, p, ScoreConfig(lam=lam, c_sharpness=c))
            gaps.append(abs(value - target))
        # tanh saturates to float-exact 1 at extreme sharpness, so allow ties
        assert gaps[0] >= gaps[1] >= gaps[2]
        assert gaps[0] > 1e-9 and gaps[2] <= 1e-9


class TestNestedLikelihood:
    def test_adding_an_edge_cannot_hurt_fit(self, rng, fig_confounded_pair):
        delta = np.zeros((4, 4))
        delta[0, 2] = 1.1
        delta[1, 3] = 0.9
        beta = np.eye(4)
        beta[2, 3] = beta[3, 2] = 0.5
        data = sample_data(SemParams(delta, beta), 2000, rng, names=list("ABCD"))
        small = fig_confounded_pair
        bigger = Admg.from_edges(
            list("ABCD"),
            directed=[("A", "C"), ("B", "D"), ("A", "D")],
            bidirected=[("C", "D")],
        )
        fit_small = regularized_ricf(data, support=small, tol=1e-8, max_iterations=100)
        fit_big = regularized_ricf(data, support=bigger, tol=1e-8, max_iterations=100)
        nll_small = gaussian_neg2_loglik(data, fit_small.params)
        nll_big = gaussian_neg2_loglik(data, fit_big.params)
        assert nll_big <= nll_small + 1e-6
