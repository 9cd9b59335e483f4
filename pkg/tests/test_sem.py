import numpy as np
import pytest

import helpers
from admglearn.graphs import Admg, GraphClass, GraphError, random_admg
from admglearn.sem import (
    Dataset,
    SemParams,
    gaussian_neg2_loglik,
    implied_covariance,
    random_parameters,
    sample_data,
    standardize,
    verma_residual,
)


class TestSemParams:
    def test_asymmetric_beta_rejected(self):
        with pytest.raises(ValueError):
            SemParams(np.zeros((2, 2)), [[1.0, 0.3], [0.0, 1.0]])

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            SemParams(np.zeros((2, 2)), np.eye(3))


class TestDataset:
    def test_needs_two_rows(self):
        with pytest.raises(ValueError):
            Dataset(np.zeros((1, 3)))

    def test_two_rows_fine(self):
        ds = Dataset([[0.0, 1.0], [1.0, 0.0]])
        assert ds.n == 2 and ds.d == 2

    def test_cov_is_centered_with_divisor_n(self):
        X = np.array([[1.0, 2.0], [3.0, 2.0], [5.0, 8.0], [7.0, 8.0]])
        ds = Dataset(X)
        centered = X - X.mean(axis=0)
        assert np.allclose(ds.cov, centered.T @ centered / 4)

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            Dataset([[0.0, np.inf], [1.0, 2.0]])


class TestImpliedCovariance:
    def test_scalar(self):
        p = SemParams(np.zeros((1, 1)), [[2.0]])
        assert np.allclose(implied_covariance(p), [[2.0]])

    def test_single_edge_hand_value(self):
        p = SemParams([[0.0, 0.5], [0.0, 0.0]], np.eye(2))
        assert np.allclose(implied_covariance(p), [[1.0, 0.5], [0.5, 1.25]])

    def test_symmetric_and_positive_definite(self, rng):
        for _ in range(200):
            g = random_admg(4, 0.4, 0.3, GraphClass.BOW_FREE, rng)
            p = random_parameters(g, rng)
            sigma = implied_covariance(p)
            assert np.array_equal(sigma, sigma.T)
            np.linalg.cholesky(sigma)  # raises if not PD


class TestSampleData:
    def test_identity_model_unit_variance(self, rng):
        p = SemParams(np.zeros((3, 3)), np.eye(3))
        data = sample_data(p, 40000, rng)
        cov = data.cov
        assert np.allclose(np.diag(cov), 1.0, atol=3 / np.sqrt(40000) * 3)
        off = cov[~np.eye(3, dtype=bool)]
        assert np.all(np.abs(off) < 0.05)

    def test_fixed_seed_matches_implied(self):
        p = SemParams([[0.0, 0.5], [0.0, 0.0]], np.eye(2))
        data = sample_data(p, 100000, np.random.default_rng(5))
        assert np.abs(data.cov - implied_covariance(p)).max() < 0.02

    def test_minimum_size(self, rng):
        p = SemParams(np.zeros((2, 2)), np.eye(2))
        assert sample_data(p, 2, rng).n == 2

    def test_monte_carlo_frobenius(self, fig_confounded_pair):
        delta = np.zeros((4, 4))
        delta[0, 2] = 0.9
        delta[1, 3] = -0.8
        beta = np.eye(4)
        beta[2, 3] = beta[3, 2] = 0.5
        p = SemParams(delta, beta)
        sigma = implied_covariance(p)
        n = 100000
        bound = 5 * 4 / np.sqrt(n)
        for seed in range(20):
            data = sample_data(p, n, np.random.default_rng(seed))
            assert np.linalg.norm(data.cov - sigma) <= bound


class TestRandomParameters:
    def test_empty_graph(self, rng):
        g = Admg.from_edges(["X", "Y"], directed=[])
        p = random_parameters(g, rng)
        assert np.all(p.delta == 0)
        assert p.beta[0, 1] == 0
        assert 0.7 <= p.beta[0, 0] <= 1.2

    def test_ranges_on_support(self, fig_confounded_pair, rng):
        for _ in range(100):
            p = random_parameters(fig_confounded_pair, rng)
            a, c = 0, 2
            b, d = 1, 3
            assert 0.5 <= abs(p.delta[a, c]) <= 2.0
            assert 0.5 <= abs(p.delta[b, d]) <= 2.0
            assert 0.4 <= abs(p.beta[c, d]) <= 0.7
            assert p.beta[c, c] >= 0.7 + abs(p.beta[c, d])
            # off-support entries stay exactly zero
            assert p.delta[a, b] == 0 and p.beta[a, b] == 0

    def test_beta_diagonally_dominant_and_pd(self, rng):
        for _ in range(200):
            g = random_admg(5, 0.4, 0.4, GraphClass.BOW_FREE, rng)
            p = random_parameters(g, rng)
            off = np.abs(p.beta - np.diag(np.diag(p.beta))).sum(axis=1)
            assert np.all(np.diag(p.beta) > off)
            np.linalg.cholesky(p.beta)

    def test_cyclic_graph_rejected(self, rng):
        g = Admg.from_edges(["A", "B"], directed=[("A", "B"), ("B", "A")])
        with pytest.raises(GraphError):
            random_parameters(g, rng)


class TestLikelihood:
    def test_scalar_mle_closed_form(self, rng):
        data = sample_data(SemParams(np.zeros((1, 1)), [[1.7]]), 500, rng)
        s2 = data.cov[0, 0]
        value = gaussian_neg2_loglik(data, SemParams(np.zeros((1, 1)), [[s2]]))
        assert value == pytest.approx(data.n * (np.log(2 * np.pi * s2) + 1))

    def test_saturated_model_is_minimum(self, rng):
        p = SemParams([[0.0, 0.7], [0.0, 0.0]], np.eye(2))
        data = sample_data(p, 400, rng)
        S = data.cov
        # a saturated parameterization reproducing S exactly
        saturated = SemParams(np.zeros((2, 2)), S)
        base = gaussian_neg2_loglik(data, saturated)
        for _ in range(50):
            delta = np.zeros((2, 2))
            delta[0, 1] = rng.uniform(-2, 2)
            beta = np.eye(2) * rng.uniform(0.5, 3.0, 2)
            assert gaussian_neg2_loglik(data, SemParams(delta, beta)) >= base - 1e-8

    def test_linear_in_n(self, rng):
        p = SemParams(np.zeros((2, 2)), np.eye(2))
        data = sample_data(p, 300, rng)
        doubled = Dataset(np.vstack([data.X, data.X]), data.names)
        ref = SemParams([[0.0, 0.3], [0.0, 0.0]], np.eye(2))
        assert gaussian_neg2_loglik(doubled, ref) == pytest.approx(
            2 * gaussian_neg2_loglik(data, ref)
        )

    def test_non_pd_sigma_raises(self):
        data = Dataset([[0.0, 1.0], [1.0, 0.0], [0.5, 0.5]])
        bad = SemParams(np.zeros((2, 2)), [[1.0, 2.0], [2.0, 1.0]])
        with pytest.raises(np.linalg.LinAlgError):
            gaussian_neg2_loglik(data, bad)


class TestVermaResidual:
    def test_zero_on_implied_covariances(self, fig_verma, rng):
        for _ in range(100):
            p = random_parameters(fig_verma, rng)
            p_std, sigma_std = standardize(p)
            assert abs(verma_residual(sigma_std, p_std)) <= 1e-10

    def test_zero_on_plain_chain(self, rng):
        # A -> C -> D -> B with no confounding
        g = Admg.from_edges(
            helpers.NAMES_ABCD, directed=[("A", "C"), ("C", "D"), ("D", "B")]
        )
        for _ in range(20):
            p = random_parameters(g, rng)
            p_std, sigma_std = standardize(p)
            assert abs(verma_residual(sigma_std, p_std)) <= 1e-10

    def test_nonzero_with_extra_edge(self, rng):
        g = Admg.from_edges(
            helpers.NAMES_ABCD,
            directed=[("A", "C"), ("C", "D"), ("D", "B"), ("C", "B")],
            bidirected=[("A", "B"), ("A", "D")],
        )
        rng = np.random.default_rng(3)
        p = random_parameters(g, rng)
        p_std, sigma_std = standardize(p)
        assert abs(verma_residual(sigma_std, p_std)) > 1e-4

    def test_wrong_dimension_rejected(self):
        p = SemParams(np.zeros((3, 3)), np.eye(3))
        with pytest.raises(ValueError):
            verma_residual(np.eye(3), p)

    def test_standardize_gives_unit_variances(self, fig_verma, rng):
        p = random_parameters(fig_verma, rng)
        p_std, sigma_std = standardize(p)
        assert np.allclose(np.diag(sigma_std), 1.0)
        assert np.allclose(implied_covariance(p_std), sigma_std, atol=1e-12)
