import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from zeropower import (
    ComplementBasis,
    DesignMatrix,
    ModelPoint,
    ar1_model,
    build_lattice_weights,
    complement_basis,
    limit_vector,
    sar_model,
    sigma_at,
    sigma_dot_zero,
    weights_matrix,
)
from zeropower.exceptions import ConditioningError, DomainError, LimitVerificationError, RankError
from zeropower.model import perron_power_iteration, sample_y, sigma_factor

from conftest import k4


class TestLattice:
    def test_queen_2x2_is_complete_graph(self):
        W = build_lattice_weights(2, 2, "queen")
        assert_array_equal(W.entries, k4())
        assert_allclose(W.spectral_radius, 3.0, atol=1e-12)

    def test_rook_1x3_is_path(self):
        W = build_lattice_weights(1, 3, "rook")
        assert_array_equal(W.entries, [[0, 1, 0], [1, 0, 1], [0, 1, 0]])
        assert_allclose(W.spectral_radius, np.sqrt(2), atol=1e-12)

    def test_queen_4x4_degrees(self, queen):
        deg = queen.entries.sum(axis=1).reshape(4, 4)
        assert_array_equal(deg, [[3, 5, 5, 3], [5, 8, 8, 5], [5, 8, 8, 5], [3, 5, 5, 3]])
        assert queen.symmetric

    def test_power_iteration_agrees_with_eigh(self, queen):
        root, f = perron_power_iteration(queen.entries)
        assert_allclose(root, np.linalg.eigvalsh(queen.entries)[-1], atol=1e-10)
        assert_allclose(f, queen.perron_vector, atol=1e-8)

    def test_power_iteration_bipartite(self):
        # periodic adjacency: plain power iteration on W would oscillate
        W = build_lattice_weights(1, 4, "rook")
        root, f = perron_power_iteration(W.entries)
        assert_allclose(root, 2 * np.cos(np.pi / 5), atol=1e-10)
        assert np.all(f > 0)

    def test_row_standardized(self):
        W = build_lattice_weights(4, 4, "queen", "row")
        assert_allclose(W.entries.sum(axis=1), 1.0)
        assert not W.symmetric
        assert_allclose(W.spectral_radius, 1.0, atol=1e-12)
        assert_allclose(W.entries @ W.perron_vector, W.perron_vector, atol=1e-12)

    def test_perron_vector_center_heavy(self, queen):
        f = queen.perron_vector.reshape(4, 4)
        assert np.all(f > 0)
        assert f[1:3, 1:3].min() > f[[0, 0, 3, 3], [0, 3, 0, 3]].max()

    @pytest.mark.parametrize("bad", [
        np.array([[0, -1], [1, 0]]),
        np.array([[1, 1], [1, 0]]),
        np.array([[0, 1, 0], [1, 0, 0], [0, 0, 0]]),
        np.ones((2, 3)),
        np.zeros((1, 1)),
    ])
    def test_invalid_weights(self, bad):
        with pytest.raises(DomainError):
            weights_matrix(bad)

    def test_degenerate_lattice(self):
        with pytest.raises(DomainError):
            build_lattice_weights(1, 1)
        with pytest.raises(DomainError):
            build_lattice_weights(2, 2, "bishop")


class TestComplementBasis:
    def test_coordinate_subspace(self):
        C = complement_basis(np.array([[1.0], [0.0], [0.0]]))
        assert_allclose(C.rows @ C.rows.T, np.eye(2), atol=1e-14)
        assert_allclose(C.rows[:, 0], 0, atol=1e-14)

    def test_projector_oracle(self, rng):
        Z = rng.standard_normal((16, 1))
        C = complement_basis(Z)
        P = np.eye(16) - Z @ np.linalg.solve(Z.T @ Z, Z.T)
        assert_allclose(C.projector(), P, atol=1e-10)
        assert np.linalg.norm(C.rows @ Z) <= 1e-10
        assert_allclose(C.rows @ C.rows.T, np.eye(15), atol=1e-12)

    def test_sign_convention_and_determinism(self, rng):
        Z = rng.standard_normal((9, 3))
        C1, C2 = complement_basis(Z), complement_basis(Z.copy())
        assert_array_equal(C1.rows, C2.rows)
        for row in C1.rows:
            idx = np.flatnonzero(np.abs(row) > 1e-12)
            assert row[idx[0]] > 0
        assert isinstance(C1, ComplementBasis) and C1.dim == 6 and C1.parent_dim == 3

    def test_rank_error(self):
        Z = np.column_stack([np.ones(5), 2 * np.ones(5)])
        with pytest.raises(RankError):
            complement_basis(Z)
        with pytest.raises(RankError):
            DesignMatrix(Z)

    def test_design_shape_errors(self):
        with pytest.raises(DomainError):
            DesignMatrix(np.ones((2, 2)))
        with pytest.raises(DomainError):
            DesignMatrix(np.array([[1.0], [np.nan], [2.0]]))


class TestSigma:
    def test_identity_at_zero(self, sar, ar1):
        assert_allclose(sigma_at(sar, 0.0), np.eye(16), atol=1e-14)
        assert_allclose(sigma_at(ar1, 0.0), np.eye(16))

    def test_ar1_small(self):
        S = sigma_at(ar1_model(3), 0.5)
        assert_allclose(S, [[1, .5, .25], [.5, 1, .5], [.25, .5, 1]])

    def test_sar_k4_spectral_oracle(self):
        m = sar_model(k4())
        lam, F = np.linalg.eigh(k4())
        oracle = (F / (1 - 0.1 * lam) ** 2) @ F.T
        assert_allclose(sigma_at(m, 0.1), oracle, atol=1e-12)

    @pytest.mark.parametrize("frac", [0.1, 0.5, 0.9, 0.999])
    def test_sar_queen_spectral_oracle(self, sar, queen, frac):
        rho = frac * sar.a
        lam, F = np.linalg.eigh(queen.entries)
        oracle = (F / (1 - rho * lam) ** 2) @ F.T
        S = sigma_at(sar, rho)
        assert_allclose(S / oracle.max(), oracle / oracle.max(), atol=1e-8)
        np.linalg.cholesky(S)

    @pytest.mark.parametrize("model_name", ["sar", "ar1"])
    def test_factor(self, request, model_name):
        model = request.getfixturevalue(model_name)
        for frac in (0.0, 0.3, 0.99, 0.9999):
            rho = frac * model.a
            L = sigma_factor(model, rho)
            S = sigma_at(model, rho)
            assert_allclose(L @ L.T, S, atol=1e-9 * np.abs(S).max())

    def test_sigma_dot_ar1(self):
        assert_array_equal(sigma_dot_zero(ar1_model(3)), [[0, 1, 0], [1, 0, 1], [0, 1, 0]])

    @pytest.mark.parametrize("model_name", ["sar", "ar1"])
    def test_sigma_dot_finite_difference(self, request, model_name):
        model = request.getfixturevalue(model_name)
        h = 1e-5 * model.a
        # one-sided at the boundary, using Sigma(0) = I and a second-order stencil
        fd = (-3 * np.eye(model.n) + 4 * sigma_at(model, h) - sigma_at(model, 2 * h)) / (2 * h)
        assert_allclose(fd, sigma_dot_zero(model), atol=1e-8)

    def test_sigma_dot_sar_is_2w(self, sar, queen):
        assert_allclose(sigma_dot_zero(sar), 2 * queen.entries)

    def test_domain_errors(self, sar):
        with pytest.raises(DomainError):
            sigma_at(sar, sar.a)
        with pytest.raises(DomainError):
            sigma_at(sar, -0.1)
        with pytest.raises(ConditioningError):
            sigma_at(sar, sar.a * (1 - 1e-14))


class TestLimitVector:
    def test_ar1(self):
        assert_allclose(limit_vector(ar1_model(4)), [0.5] * 4)
        assert_array_equal(ar1_model(9).e, np.full(9, 1 / 3))

    def test_k4(self):
        assert_allclose(limit_vector(sar_model(k4())), [0.5] * 4, atol=1e-12)

    def test_queen(self, sar):
        e = limit_vector(sar)
        assert_allclose(np.linalg.norm(e), 1.0)
        assert np.all(e > 0)

    def test_failure_flagged(self):
        # two cliques joined by a feeble link: the spectral gap is tiny, so the
        # covariance has not concentrated on e e' at a(1 - 1e-4)
        W = np.zeros((8, 8))
        W[:4, :4] = W[4:, 4:] = k4()
        W[3, 4] = W[4, 3] = 1e-6
        m = sar_model(W)
        with pytest.raises(LimitVerificationError):
            limit_vector(m)
        limit_vector(m, check=False)


def test_sample_y_mean_and_invariance(sar, ones16):
    rng = np.random.default_rng(1)
    pt = ModelPoint(np.array([2.0]), 3.0, 0.0)
    y = sample_y(sar, ones16, pt, 20000, rng)
    assert_allclose(y.mean(axis=1), 2.0, atol=0.1)
    assert_allclose(y.std(axis=1), 3.0, atol=0.1)
    with pytest.raises(DomainError):
        ModelPoint(np.zeros(1), 0.0, 0.1)
