import numpy as np
import pytest

from slmfic import (
    Dataset,
    FisherInfo,
    PsiWeights,
    SpatialWeights,
    SubmodelId,
    enumerate_submodels,
    g_matrix,
    h_empirical,
    k_empirical,
    median_bandwidth,
    omega_i,
    pointwise_risk,
    psi_kernel,
    psi_uniform,
    rho_beta_blocks,
    safic_score,
)
from slmfic.errors import BandwidthError

from conftest import random_dataset, random_info


class TestPsi:
    def test_uniform(self):
        psi = psi_uniform(4)
        assert psi.psi.tolist() == [0.25] * 4
        assert psi.scheme == "uniform"

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            PsiWeights(np.array([0.5, 0.7, -0.2]))

    def test_sum_enforced(self):
        with pytest.raises(ValueError):
            PsiWeights(np.array([0.5, 0.6]))

    def test_kernel_two_points(self):
        # weights proportional to exp(-d^2/2) for unit bandwidth
        psi = psi_kernel(np.array([[0.0], [1.0]]), z0=[0.0], h=1.0)
        e = np.exp(-0.5)
        assert psi.psi[0] == pytest.approx(1 / (1 + e), abs=1e-12)
        assert psi.psi[1] == pytest.approx(e / (1 + e), abs=1e-12)
        assert psi.scheme == "kernel"

    def test_kernel_peaks_at_center(self, rng):
        X = rng.standard_normal((20, 2))
        psi = psi_kernel(X, z0=X[7], h=0.5)
        assert np.argmax(psi.psi) == 7

    def test_kernel_flat_limit(self, rng):
        X = rng.standard_normal((10, 2))
        psi = psi_kernel(X, z0=np.zeros(2), h=1e6)
        assert np.allclose(psi.psi, 0.1, atol=1e-9)

    def test_kernel_underflow(self):
        X = np.array([[0.0], [100.0]])
        with pytest.raises(BandwidthError):
            psi_kernel(X, z0=[-1e6], h=1e-3)

    def test_median_bandwidth(self):
        X = np.array([[0.0], [1.0], [3.0]])
        # pairwise distances 1, 3, 2 -> median 2
        assert median_bandwidth(X) == 2.0

    def test_median_bandwidth_degenerate(self):
        with pytest.raises(BandwidthError):
            median_bandwidth(np.ones((5, 2)))


class TestBlocks:
    def test_scalar_schur(self):
        I = np.array([[2.0, 0.0, 1.0], [0.0, 3.0, 0.0], [1.0, 0.0, 1.0]])
        blocks = rho_beta_blocks(FisherInfo(I, n_obs=10))
        assert blocks.I_rr == 2.0
        assert blocks.I_bb[0, 0] == 1.0
        # schur = 1 - 1/2 = 0.5, so Q = 2
        assert blocks.Q[0, 0] == pytest.approx(2.0, abs=1e-12)

    def test_q_symmetric_psd(self, rng):
        blocks = rho_beta_blocks(random_info(rng, 4))
        assert np.array_equal(blocks.Q, blocks.Q.T)
        assert np.linalg.eigvalsh(blocks.Q)[0] > 0

    def test_sigma2_row_ignored(self, rng):
        info = random_info(rng, 3)
        M = info.matrix.copy()
        M[1, 1] = 999.0
        assert np.allclose(
            rho_beta_blocks(FisherInfo(M, 10)).Q,
            rho_beta_blocks(info).Q,
            atol=1e-12,
        )


class TestG:
    def test_narrow_zero(self, rng):
        blocks = rho_beta_blocks(random_info(rng, 3))
        assert np.array_equal(g_matrix(blocks, SubmodelId.narrow(3)), np.zeros((3, 3)))

    def test_wide_identity(self, rng):
        blocks = rho_beta_blocks(random_info(rng, 3))
        G = g_matrix(blocks, SubmodelId.wide(3))
        assert np.allclose(G, np.eye(3), atol=1e-10)

    def test_idempotent(self, rng):
        blocks = rho_beta_blocks(random_info(rng, 4))
        for S in enumerate_submodels(4):
            G = g_matrix(blocks, S)
            assert np.max(np.abs(G @ G - G)) < 1e-8

    def test_projects_onto_selected_rows(self, rng):
        # rows of G for unselected variables vanish only in the Q^{-1} metric;
        # the defining property is G' Pi' = Pi' on selected coordinates
        blocks = rho_beta_blocks(random_info(rng, 4))
        S = SubmodelId.from_indices([1, 2], 4)
        G = g_matrix(blocks, S)
        v = np.zeros(4)
        v[1] = 1.0
        # G fixes vectors already in the projected space: G (Pi' a) = Pi' a
        from slmfic import projection_matrix

        Pi = projection_matrix(S)
        a = np.array([0.3, -1.2])
        assert np.allclose(G @ (Pi.T @ a), Pi.T @ a, atol=1e-10)


class TestMoments:
    def test_h_two_units_by_hand(self):
        W = SpatialWeights.from_adjacency(np.array([[0.0, 1.0], [1.0, 0.0]]))
        X = np.array([[1.0, 0.0], [0.0, 2.0]])
        Y = np.array([3.0, -1.0])
        data = Dataset(Y=Y, X=X, W=W)
        psi = PsiWeights(np.array([0.25, 0.75]))
        H = h_empirical(data, psi)
        # gradient of the predictor at unit i is ((WY)_i, x_i)
        g0 = np.array([-1.0, 1.0, 0.0])
        g1 = np.array([3.0, 0.0, 2.0])
        expected = 0.25 * np.outer(g0, g0) + 0.75 * np.outer(g1, g1)
        assert np.allclose(H, expected, atol=1e-12)

    def test_h_summation_oracle(self, rng):
        data = random_dataset(rng, n=15, p=3)
        psi = psi_uniform(15)
        WY = data.W.matrix @ data.Y
        expected = np.zeros((4, 4))
        for i in range(15):
            g = np.concatenate(([WY[i]], data.X[i]))
            expected += psi.psi[i] * np.outer(g, g)
        assert np.allclose(h_empirical(data, psi), expected, atol=1e-10)

    def test_h_zero_weights_matrix(self, rng):
        W = SpatialWeights.from_adjacency(np.zeros((10, 10)))
        X = rng.standard_normal((10, 2))
        data = Dataset(Y=rng.standard_normal(10), X=X, W=W)
        H = h_empirical(data, psi_uniform(10))
        assert np.all(H[0] == 0) and np.all(H[:, 0] == 0)
        assert np.allclose(H[1:, 1:], X.T @ X / 10, atol=1e-12)

    def test_k_equals_weighted_outer_sum(self, rng):
        data = random_dataset(rng, n=20, p=3)
        psi = psi_kernel(data.X, z0=np.zeros(3), h=median_bandwidth(data.X))
        blocks = rho_beta_blocks(random_info(rng, 3))
        K = k_empirical(blocks, h_empirical(data, psi))
        expected = np.zeros((3, 3))
        for i in range(20):
            w = omega_i(i, data, blocks)
            expected += psi.psi[i] * np.outer(w, w)
        assert np.max(np.abs(K - expected)) < 1e-10

    def test_k_psd(self, rng):
        data = random_dataset(rng, n=25, p=4)
        blocks = rho_beta_blocks(random_info(rng, 4))
        K = k_empirical(blocks, h_empirical(data, psi_uniform(25)))
        assert np.linalg.eigvalsh(K)[0] > -1e-10

    def test_omega_zero_weights(self, rng):
        W = SpatialWeights.from_adjacency(np.zeros((5, 5)))
        X = rng.standard_normal((5, 2))
        data = Dataset(Y=rng.standard_normal(5), X=X, W=W)
        blocks = rho_beta_blocks(random_info(rng, 2))
        assert np.allclose(omega_i(3, data, blocks), -X[3], atol=1e-12)

    def test_omega_index_checked(self, rng):
        data = random_dataset(rng, n=5, p=2)
        blocks = rho_beta_blocks(random_info(rng, 2))
        with pytest.raises(ValueError):
            omega_i(5, data, blocks)


class TestRisk:
    def test_narrow_risk(self, rng):
        data = random_dataset(rng, n=10, p=2)
        blocks = rho_beta_blocks(random_info(rng, 2))
        delta = rng.standard_normal(2)
        w = omega_i(2, data, blocks)
        wy = float(data.W.matrix[2] @ data.Y)
        expected = float(w @ delta) ** 2 + wy * wy / blocks.I_rr
        assert pointwise_risk(2, SubmodelId.narrow(2), delta, blocks, data) == pytest.approx(
            expected, abs=1e-10
        )

    def test_wide_risk(self, rng):
        data = random_dataset(rng, n=10, p=2)
        blocks = rho_beta_blocks(random_info(rng, 2))
        delta = rng.standard_normal(2)
        w = omega_i(4, data, blocks)
        wy = float(data.W.matrix[4] @ data.Y)
        expected = wy * wy / blocks.I_rr + float(w @ blocks.Q @ w)
        assert pointwise_risk(4, SubmodelId.wide(2), delta, blocks, data) == pytest.approx(
            expected, abs=1e-8
        )

    def test_average_decomposition(self, rng):
        # psi-average of pointwise risks = score + shared rho term, exactly
        data = random_dataset(rng, n=15, p=3)
        psi = psi_uniform(15)
        blocks = rho_beta_blocks(random_info(rng, 3))
        delta = rng.standard_normal(3)
        K = k_empirical(blocks, h_empirical(data, psi))
        WY = data.W.matrix @ data.Y
        shared = float(psi.psi @ (WY * WY)) / blocks.I_rr
        for S in enumerate_submodels(3):
            avg = sum(
                psi.psi[i] * pointwise_risk(i, S, delta, blocks, data) for i in range(15)
            )
            row = safic_score(S, delta, blocks, K)
            assert abs(avg - (row.score + shared)) < 1e-10


class TestScore:
    def test_wide_is_penalty_only(self, rng):
        blocks = rho_beta_blocks(random_info(rng, 3))
        data = random_dataset(rng, n=12, p=3)
        K = k_empirical(blocks, h_empirical(data, psi_uniform(12)))
        row = safic_score(SubmodelId.wide(3), rng.standard_normal(3), blocks, K)
        assert row.bias2 == pytest.approx(0.0, abs=1e-10)
        assert row.variance == pytest.approx(float(np.trace(blocks.Q @ K)), rel=1e-8)

    def test_narrow_is_bias_only(self, rng):
        blocks = rho_beta_blocks(random_info(rng, 3))
        data = random_dataset(rng, n=12, p=3)
        K = k_empirical(blocks, h_empirical(data, psi_uniform(12)))
        delta = rng.standard_normal(3)
        row = safic_score(SubmodelId.narrow(3), delta, blocks, K)
        assert row.variance == 0.0
        assert row.bias2 == pytest.approx(float(delta @ K @ delta), rel=1e-8)

    def test_scores_nonnegative(self, rng):
        data = random_dataset(rng, n=20, p=4)
        blocks = rho_beta_blocks(random_info(rng, 4))
        K = k_empirical(blocks, h_empirical(data, psi_uniform(20)))
        delta = rng.standard_normal(4)
        for S in enumerate_submodels(4):
            row = safic_score(S, delta, blocks, K)
            assert row.bias2 >= -1e-10
            assert row.variance >= -1e-10
