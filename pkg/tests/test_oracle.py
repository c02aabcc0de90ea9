import math

import numpy as np
import pytest

from epitrial import (Cluster, Design, DesignSpec, ModelParams, build_ctmc,
                      check_block_decomposition, exact_de,
                      exact_individual_average, exact_marginals,
                      state_distribution)
from helpers import make_cluster, random_cluster

ALPHA = 0.01
T = 10.0


def designs(p=0.5):
    return [DesignSpec(kind, p) for kind in
            (Design.BERNOULLI, Design.BLOCK, Design.CLUSTER)]


class TestGenerator:
    def test_rows_sum_to_zero(self):
        rng = np.random.default_rng(0)
        params = ModelParams(alpha=0.05, beta=0.4, gamma=-0.6)
        spec = build_ctmc(params, random_cluster(rng, 4))
        q = spec.generator
        np.testing.assert_allclose(q.sum(axis=1), 0.0, atol=1e-12)
        off = q - np.diag(np.diag(q))
        assert np.all(off >= 0.0)

    def test_transitions_add_one_individual(self):
        params = ModelParams(alpha=0.05)
        q = build_ctmc(params, make_cluster(3)).generator
        for s in range(8):
            for s2 in range(8):
                if s2 != s and q[s, s2] > 0:
                    added = s2 & ~s
                    assert s2 > s and bin(added).count("1") == 1

    def test_size_limit(self):
        params = ModelParams(alpha=0.05)
        with pytest.raises(ValueError):
            build_ctmc(params, make_cluster(13))


class TestExactMarginals:
    def test_zero_time_no_initial_infections(self):
        params = ModelParams(alpha=ALPHA)
        np.testing.assert_array_equal(
            exact_marginals(params, make_cluster(3), 0.0), np.zeros(3))

    def test_single_individual_closed_form(self):
        params = ModelParams(alpha=ALPHA)
        got = exact_marginals(params, make_cluster(1), T)[0]
        assert got == pytest.approx(1.0 - math.exp(-0.1), abs=1e-10)
        assert got == pytest.approx(0.0951626, abs=5e-8)

    def test_pair_closed_form(self):
        # two individuals, all effects zero: survival of j solves the
        # two-state race, P(surv) = e^{-2at} + a e^{-bt}(e^{(b-2a)t}-1)/(b-2a)
        # with a = alpha and b = alpha + 1
        params = ModelParams(alpha=ALPHA)
        a, b = ALPHA, ALPHA + 1.0
        surv = (math.exp(-2 * a * T)
                + a * math.exp(-b * T) * (math.exp((b - 2 * a) * T) - 1) / (b - 2 * a))
        got = exact_marginals(params, make_cluster(2), T)
        assert got[0] == pytest.approx(got[1], abs=1e-12)
        assert got[0] == pytest.approx(1.0 - surv, abs=1e-10)

    def test_initially_infected_partner_closed_form(self):
        # with one partner infected at t=0 the other faces constant hazard
        # alpha + 1, so the marginal is the exponential CDF at that rate
        params = ModelParams(alpha=ALPHA)
        cluster = make_cluster(2, initial=[0, 1])
        got = exact_marginals(params, cluster, T)
        assert got[1] == pytest.approx(1.0, abs=1e-12)
        assert got[0] == pytest.approx(1.0 - math.exp(-(ALPHA + 1.0) * T), abs=1e-10)

    def test_backends_agree_on_pinned_pair(self):
        params = ModelParams(alpha=ALPHA)
        cluster = make_cluster(2)
        via_expm = exact_marginals(params, cluster, T, method="expm")
        via_rk4 = exact_marginals(params, cluster, T, method="rk4", rk4_step=1e-4)
        np.testing.assert_allclose(via_expm, via_rk4, atol=1e-8)

    def test_backends_agree_on_random_instances(self):
        rng = np.random.default_rng(42)
        for n in (2, 3, 4):
            params = ModelParams(alpha=float(rng.uniform(0.01, 0.2)),
                                 beta=float(rng.uniform(-1, 1)),
                                 gamma=float(rng.uniform(-1, 1)))
            cluster = random_cluster(rng, n)
            via_expm = exact_marginals(params, cluster, T, method="expm")
            via_rk4 = exact_marginals(params, cluster, T, method="rk4",
                                      rk4_step=1e-3)
            np.testing.assert_allclose(via_expm, via_rk4, atol=1e-8)

    def test_distribution_is_probability_vector(self):
        rng = np.random.default_rng(7)
        params = ModelParams(alpha=0.1, beta=0.5, gamma=-1.0)
        for t in (0.1, 1.0, 10.0, 100.0):
            pi = state_distribution(params, random_cluster(rng, 4), t)
            assert np.all(pi >= 0.0)
            assert pi.sum() == pytest.approx(1.0, abs=1e-10)

    def test_marginals_monotone_in_time(self):
        params = ModelParams(alpha=0.05, gamma=0.5)
        cluster = make_cluster(3, eta=[0.2, -0.1, 0.0], treatment=[1, 0, 1])
        grid = [0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0]
        last = np.zeros(3)
        for t in grid:
            now = exact_marginals(params, cluster, t)
            assert np.all(now >= last - 1e-12)
            last = now


class TestIndividualAverage:
    def test_bernoulli_null_beta_invariant_to_own_treatment(self):
        # no susceptibility effect + independent assignment: own treatment
        # cannot move the averaged outcome, for any infectiousness effect
        cluster = make_cluster(3, eta=[0.1, -0.2, 0.3], xi=[0.0, 0.2, -0.1])
        design = DesignSpec(Design.BERNOULLI, 0.5)
        for gamma in (-1.5, -0.3, 0.8, 2.0):
            params = ModelParams(alpha=ALPHA, beta=0.0, gamma=gamma)
            for j in range(3):
                y1 = exact_individual_average(params, cluster, design, j, 1, T)
                y0 = exact_individual_average(params, cluster, design, j, 0, T)
                assert abs(y1 - y0) < 1e-10

    def test_cluster_design_is_point_mass(self):
        cluster = make_cluster(3, eta=[0.1, 0.0, -0.1])
        design = DesignSpec(Design.CLUSTER, 0.5)
        params = ModelParams(alpha=ALPHA, beta=0.3, gamma=-0.5)
        all_ones = exact_marginals(params, cluster.with_treatment([1, 1, 1]), T)
        all_zero = exact_marginals(params, cluster.with_treatment([0, 0, 0]), T)
        for j in range(3):
            assert exact_individual_average(params, cluster, design, j, 1, T) \
                == pytest.approx(all_ones[j], abs=1e-12)
            assert exact_individual_average(params, cluster, design, j, 0, T) \
                == pytest.approx(all_zero[j], abs=1e-12)

    def test_block_negative_gamma_positive_de(self):
        cluster = make_cluster(3)
        design = DesignSpec(Design.BLOCK, 1 / 3)
        params = ModelParams(alpha=ALPHA, beta=0.0, gamma=-1.0)
        y1 = exact_individual_average(params, cluster, design, 0, 1, T)
        y0 = exact_individual_average(params, cluster, design, 0, 0, T)
        assert y1 - y0 > 0.0

    def test_size_limit(self):
        params = ModelParams(alpha=ALPHA)
        with pytest.raises(ValueError):
            exact_individual_average(params, make_cluster(11),
                                     DesignSpec(Design.BERNOULLI, 0.5), 0, 1, T)


class TestExactDe:
    def test_null_gamma_null_de_everywhere(self):
        cluster = make_cluster(4, eta=[0.2, -0.1, 0.0, 0.1],
                               xi=[0.1, 0.0, -0.2, 0.3])
        params = ModelParams(alpha=ALPHA, beta=0.0, gamma=0.0)
        for design in designs():
            de = exact_de(params, cluster, design, T)
            assert np.all(np.abs(de.per_individual) < 1e-10)

    def test_cluster_positive_gamma_positive_de(self):
        params = ModelParams(alpha=ALPHA, beta=0.0, gamma=1.0)
        de = exact_de(params, make_cluster(3), DesignSpec(Design.CLUSTER, 0.5), T)
        assert np.all(de.per_individual > 0.0)

    def test_block_negative_gamma_positive_de(self):
        params = ModelParams(alpha=ALPHA, beta=0.0, gamma=-1.0)
        de = exact_de(params, make_cluster(4), DesignSpec(Design.BLOCK, 0.5), T)
        assert np.all(de.per_individual > 0.0)

    def test_sign_grid_randomized(self):
        # proposition signs hold at arbitrary gamma, sizes, and coefficients
        rng = np.random.default_rng(11)
        for _ in range(12):
            n = int(rng.integers(2, 6))
            gamma = float(rng.uniform(0.2, 2.0)) * (1 if rng.random() < 0.5 else -1)
            params = ModelParams(alpha=ALPHA, beta=0.0, gamma=gamma)
            cluster = random_cluster(rng, n, scale=0.1)
            for design in designs():
                de = exact_de(params, cluster, design, T).per_individual
                if design.kind is Design.BERNOULLI:
                    assert np.all(np.abs(de) < 1e-10)
                elif design.kind is Design.BLOCK:
                    expected = -math.copysign(1.0, gamma)
                    assert np.all(expected * de > 0.0)
                else:
                    expected = math.copysign(1.0, gamma)
                    assert np.all(expected * de > 0.0)


class TestBlockDecomposition:
    def test_binomial_shift_identity(self):
        for n in range(2, 21):
            for m in range(1, n):
                assert m * math.comb(n - 1, m) == (n - m) * math.comb(n - 1, m - 1)

    def test_zero_parameters_zero_residual(self):
        params = ModelParams(alpha=ALPHA, beta=0.0, gamma=0.0)
        for n, m in ((3, 1), (4, 2), (5, 3)):
            residual = check_block_decomposition(params, make_cluster(n), m, 0, T)
            assert residual < 1e-12

    def test_pinned_instance(self):
        params = ModelParams(alpha=ALPHA, beta=0.0, gamma=1.0)
        residual = check_block_decomposition(params, make_cluster(4), 2, 1, T)
        assert residual < 1e-10

    def test_randomized_instances(self):
        rng = np.random.default_rng(23)
        for n, m in ((3, 1), (4, 2), (5, 2)):
            params = ModelParams(alpha=float(rng.uniform(0.005, 0.1)),
                                 beta=float(rng.uniform(-1, 1)),
                                 gamma=float(rng.uniform(-2, 2)))
            cluster = random_cluster(rng, n)
            j = int(rng.integers(n))
            assert check_block_decomposition(params, cluster, m, j, T) < 1e-10

    def test_invalid_m_rejected(self):
        params = ModelParams(alpha=ALPHA)
        with pytest.raises(ValueError):
            check_block_decomposition(params, make_cluster(4), 0, 0, T)
        with pytest.raises(ValueError):
            check_block_decomposition(params, make_cluster(4), 4, 0, T)
