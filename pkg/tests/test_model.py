import numpy as np
import pytest
from mpmath import mp

from robustirt import (
    ItemBank,
    ResponseMatrix,
    enumerate_patterns,
    icc,
    log_pattern_prob_given_theta,
    marginal_pattern_prob,
    pattern_prob_given_theta,
    score_jacobian_sigma,
    score_vector_xi,
)
from robustirt.model import log_icc_curves

D = 1.702


class TestIcc:
    def test_half_at_difficulty(self):
        bank = ItemBank(difficulties=np.array([-1.3, 0.0, 2.4]))
        for j, b in enumerate(bank.difficulties):
            assert abs(icc(b, j, bank) - 0.5) < 1e-14

    def test_high_precision_value(self):
        # independent evaluation of 1/(1+exp(-1.702*2)) at 50 digits
        mp.dps = 50
        expected = float(1 / (1 + mp.e ** (-mp.mpf("1.702") * 2)))
        bank = ItemBank(difficulties=np.array([-2.0]))
        assert abs(icc(0.0, 0, bank) - expected) < 1e-14
        assert abs(icc(0.0, 0, bank) - 0.9678265) < 5e-8

    def test_saturation(self):
        bank = ItemBank(difficulties=np.array([0.0]))
        assert icc(10.0, 0, bank) > 0.9999999
        assert icc(-10.0, 0, bank) < 1e-7

    def test_clamped_open_interval(self):
        bank = ItemBank(difficulties=np.array([0.0]))
        assert 0.0 < icc(-500.0, 0, bank) < 1.0
        assert 0.0 < icc(500.0, 0, bank) < 1.0

    def test_monotone_in_theta_and_difficulty(self):
        thetas = np.linspace(-4, 4, 41)
        bank = ItemBank(difficulties=np.array([0.3]))
        vals = np.array([icc(t, 0, bank) for t in thetas])
        assert np.all(np.diff(vals) > 0)
        banks = [ItemBank(difficulties=np.array([b])) for b in np.linspace(-3, 3, 25)]
        vals_b = np.array([icc(0.7, 0, bk) for bk in banks])
        assert np.all(np.diff(vals_b) < 0)

    def test_index_out_of_range(self):
        bank = ItemBank(difficulties=np.array([0.0]))
        with pytest.raises(IndexError):
            icc(0.0, 1, bank)


class TestPatternProb:
    def test_single_item_half(self):
        bank = ItemBank(difficulties=np.array([0.4]))
        assert abs(pattern_prob_given_theta([1], 0.4, bank) - 0.5) < 1e-14

    def test_two_item_quarter(self):
        bank = ItemBank(difficulties=np.array([0.0, 0.0]))
        assert abs(pattern_prob_given_theta([1, 0], 0.0, bank) - 0.25) < 1e-14

    def test_matches_bruteforce_product(self, bank5):
        u = np.array([1, 1, 0, 0, 0])
        theta = 0.0
        expected = 1.0
        for j, b in enumerate(bank5.difficulties):
            p = 1.0 / (1.0 + np.exp(-D * (theta - b)))
            expected *= p if u[j] else 1.0 - p
        assert abs(pattern_prob_given_theta(u, theta, bank5) - expected) < 1e-14

    def test_log_linear_consistency(self, bank5):
        u = np.array([0, 1, 1, 0, 1])
        lp = log_pattern_prob_given_theta(u, -0.7, bank5)
        assert abs(np.exp(lp) - pattern_prob_given_theta(u, -0.7, bank5)) < 1e-15

    @pytest.mark.parametrize("n_items", [1, 4, 10])
    def test_normalization_over_patterns(self, n_items):
        rng = np.random.default_rng(3)
        bank = ItemBank(difficulties=rng.normal(0, 1.2, n_items))
        patterns = enumerate_patterns(n_items)
        for theta in (-1.7, 0.0, 2.2):
            total = sum(pattern_prob_given_theta(u, theta, bank) for u in patterns)
            assert abs(total - 1.0) < 1e-12


class TestMarginalPatternProb:
    def test_table_probabilities(self, bank5, grid21):
        # published occurrence percentages for the symmetric five-item bank
        expected_percent = {
            (1, 1, 0, 0, 0): 23.637,
            (1, 1, 1, 0, 0): 23.637,
            (1, 0, 0, 0, 0): 13.059,
            (0, 0, 0, 0, 0): 4.170,
            (1, 1, 1, 1, 1): 4.170,
            (0, 1, 1, 0, 0): 0.786,
            (0, 0, 1, 1, 1): 0.001,
        }
        for pattern, pct in expected_percent.items():
            got = 100.0 * marginal_pattern_prob(np.array(pattern), bank5, grid21)
            assert abs(got - pct) < 5e-4, pattern

    def test_total_probability(self, bank5, grid21):
        probs = marginal_pattern_prob(enumerate_patterns(5), bank5, grid21)
        assert abs(probs.sum() - 1.0) < 1e-10

    def test_flip_reverse_symmetry(self, bank5, grid21):
        patterns = enumerate_patterns(5)
        probs = marginal_pattern_prob(patterns, bank5, grid21)
        twins = (1 - patterns)[:, ::-1]
        probs_twin = marginal_pattern_prob(twins, bank5, grid21)
        assert np.max(np.abs(probs - probs_twin)) < 1e-12


class TestScoreVector:
    def test_values_at_difficulty(self):
        bank = ItemBank(difficulties=np.array([0.8]))
        xi_correct = score_vector_xi([1], 0.8, bank)
        xi_wrong = score_vector_xi([0], 0.8, bank)
        assert abs(xi_correct[0] + D / 2) < 1e-14
        assert abs(xi_wrong[0] - D / 2) < 1e-14

    def test_matches_log_prob_gradient(self, bank5):
        rng = np.random.default_rng(8)
        for _ in range(20):
            u = rng.integers(0, 2, 5)
            theta = rng.normal()
            base = np.asarray(bank5.difficulties)
            xi = score_vector_xi(u, theta, bank5)
            step = 1e-5
            for j in range(5):
                bp, bm = base.copy(), base.copy()
                bp[j] += step
                bm[j] -= step
                fd = (
                    log_pattern_prob_given_theta(u, theta, ItemBank(bp))
                    - log_pattern_prob_given_theta(u, theta, ItemBank(bm))
                ) / (2 * step)
                assert abs(xi[j] - fd) < 1e-6 * max(1.0, abs(fd))


class TestScoreJacobian:
    def test_diagonal_value_at_difficulty(self):
        bank = ItemBank(difficulties=np.array([-0.4]))
        sig = score_jacobian_sigma(-0.4, bank)
        assert abs(sig[0, 0] + D**2 / 4) < 1e-13

    def test_strictly_negative_and_diagonal(self, bank5):
        sig = score_jacobian_sigma(0.3, bank5)
        assert np.all(np.diag(sig) < 0)
        assert np.allclose(sig, np.diag(np.diag(sig)))

    def test_matches_xi_finite_difference(self, bank5):
        rng = np.random.default_rng(5)
        u = rng.integers(0, 2, 5)
        theta = 0.9
        sig = score_jacobian_sigma(theta, bank5)
        base = np.asarray(bank5.difficulties)
        step = 1e-5
        for j in range(5):
            bp, bm = base.copy(), base.copy()
            bp[j] += step
            bm[j] -= step
            fd = (
                score_vector_xi(u, theta, ItemBank(bp))
                - score_vector_xi(u, theta, ItemBank(bm))
            ) / (2 * step)
            assert np.max(np.abs(sig[:, j] - fd)) < 1e-6 * max(1.0, np.max(np.abs(fd)))


class TestTypes:
    def test_item_bank_validation(self):
        with pytest.raises(ValueError):
            ItemBank(difficulties=np.array([np.inf]))
        with pytest.raises(ValueError):
            ItemBank(difficulties=np.array([0.0]), scale=0.0)
        with pytest.raises(ValueError):
            ItemBank(difficulties=np.array([]))

    def test_default_scale(self):
        assert ItemBank(difficulties=np.array([0.0])).scale == 1.702

    def test_response_matrix_validation(self):
        with pytest.raises(ValueError):
            ResponseMatrix(responses=np.array([[0, 2]]))
        with pytest.raises(ValueError):
            ResponseMatrix(responses=np.array([0, 1]))
        m = ResponseMatrix(responses=np.array([[0, 1], [1, 1]]))
        assert m.row_ids == ("1", "2")
        assert m.n_respondents == 2 and m.n_items == 2

    def test_pattern_length_checked(self, bank5):
        with pytest.raises(ValueError, match="length"):
            pattern_prob_given_theta([1, 0], 0.0, bank5)
