import numpy as np
import pytest

from robustirt import (
    ItemBank,
    build_gauss_hermite,
    expect_over_theta,
    icc,
    marginal_pattern_prob,
    enumerate_patterns,
)
from robustirt.quadrature import QuadratureGrid


class TestBuildGaussHermite:
    def test_two_point_rule(self):
        grid = build_gauss_hermite(2)
        assert np.allclose(grid.nodes, [-1.0, 1.0], atol=1e-14)
        assert np.allclose(grid.weights, [0.5, 0.5], atol=1e-14)

    @pytest.mark.parametrize("k", [2, 3, 5, 11, 21, 61, 101])
    def test_normal_moments(self, k):
        grid = build_gauss_hermite(k)
        assert abs(grid.weights.sum() - 1.0) < 1e-14
        assert abs(grid.weights @ grid.nodes) < 1e-10
        assert abs(grid.weights @ grid.nodes**2 - 1.0) < 1e-10
        if k >= 3:
            assert abs(grid.weights @ grid.nodes**3) < 1e-10

    def test_fourth_moment_k21(self):
        # closed-form N(0,1) moments: E[theta^4] = 3, E[theta^6] = 15
        grid = build_gauss_hermite(21)
        assert abs(grid.weights @ grid.nodes**4 - 3.0) < 1e-10
        assert abs(grid.weights @ grid.nodes**6 - 15.0) < 1e-9

    def test_nodes_symmetric_increasing(self):
        grid = build_gauss_hermite(21)
        assert np.all(np.diff(grid.nodes) > 0)
        assert np.allclose(grid.nodes, -grid.nodes[::-1], atol=1e-10)
        assert np.all(grid.weights > 0)

    @pytest.mark.parametrize("k", [0, 1, 201, -3])
    def test_invalid_node_count(self, k):
        with pytest.raises(ValueError, match="n_nodes"):
            build_gauss_hermite(k)

    def test_grid_validation(self):
        with pytest.raises(ValueError, match="increasing"):
            QuadratureGrid(nodes=np.array([1.0, -1.0]), weights=np.array([0.5, 0.5]))
        with pytest.raises(ValueError, match="positive"):
            QuadratureGrid(nodes=np.array([-1.0, 1.0]), weights=np.array([1.5, -0.5]))
        with pytest.raises(ValueError, match="sum"):
            QuadratureGrid(nodes=np.array([-1.0, 1.0]), weights=np.array([0.6, 0.6]))


class TestExpectOverTheta:
    def test_constant(self, grid21):
        assert abs(expect_over_theta(lambda t: 1.0, grid21) - 1.0) < 1e-14

    def test_second_moment(self, grid21):
        assert abs(expect_over_theta(lambda t: t**2, grid21) - 1.0) < 1e-10

    def test_icc_at_zero_difficulty(self, grid21):
        # symmetry of the logistic about 0 under a symmetric prior gives 1/2;
        # cross-checked against a wide trapezoid rule
        bank = ItemBank(difficulties=np.array([0.0]))
        val = expect_over_theta(lambda t: icc(t, 0, bank), grid21)
        assert abs(val - 0.5) < 1e-6
        ts = np.linspace(-12, 12, 1_000_001)
        dens = np.exp(-0.5 * ts**2) / np.sqrt(2 * np.pi)
        ref = np.trapezoid(icc(ts, 0, bank) * dens, ts)
        assert abs(val - ref) < 1e-6

    def test_vector_valued(self, grid21):
        out = expect_over_theta(lambda t: np.array([1.0, t, t**2]), grid21)
        assert np.allclose(out, [1.0, 0.0, 1.0], atol=1e-10)


class TestRefinementStability:
    def test_marginals_insensitive_to_node_count(self, bank5):
        g21 = build_gauss_hermite(21)
        g61 = build_gauss_hermite(61)
        patterns = enumerate_patterns(5)
        p21 = marginal_pattern_prob(patterns, bank5, g21)
        p61 = marginal_pattern_prob(patterns, bank5, g61)
        assert np.max(np.abs(p21 - p61)) < 1e-6
