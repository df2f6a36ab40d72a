import numpy as np
import pytest

from app.core.errors import ConfigError, DomainError
from app.core.problems import (
    diff_means_pair,
    gamma_range,
    gamma_to_lambda,
    lambda_to_gamma,
    map_observation,
    one_sided_pair,
    pair_arrays,
    problem_gamma_range,
    problem_gamma_to_lambda,
    problem_lambda_to_gamma,
    to_unit_observation,
    two_sided_pair,
)
from app.models.problem import ProblemKind, ProblemSpec


class TestPairs:
    def test_two_sided(self):
        assert two_sided_pair(0.3, 0.3).as_tuple() == pytest.approx((1.0, 1.0))
        assert two_sided_pair(1.0, 0.4).as_tuple() == pytest.approx((0.0, 2.5))
        assert two_sided_pair(0.2, 0.5).as_tuple() == pytest.approx((1.6, 0.4))

    def test_one_sided(self):
        assert one_sided_pair(0.4, 0.4).as_tuple() == pytest.approx((1.0, 1.0))
        assert one_sided_pair(0.0, 0.4).as_tuple() == (1.0, 0.0)
        assert one_sided_pair(1.0, 0.25).as_tuple() == pytest.approx((1.0, 4.0))

    def test_diff_means(self):
        assert diff_means_pair(0.6, 0.6).as_tuple() == (1.0, 1.0)
        assert diff_means_pair(1.0, 0.0).as_tuple() == (0.0, 2.0)
        assert diff_means_pair(0.3, 0.8).as_tuple() == pytest.approx((1.5, 0.5))

    @pytest.mark.parametrize("x", [-0.01, 1.01])
    def test_observation_out_of_range(self, x):
        with pytest.raises(DomainError):
            two_sided_pair(x, 0.5)
        with pytest.raises(DomainError):
            one_sided_pair(x, 0.5)
        with pytest.raises(DomainError):
            diff_means_pair(0.5, x)

    def test_null_mean_pairs_are_fair(self):
        # (1 - mu0) e1 + mu0 e2 = 1 for every x in [0, 1]
        for x in np.linspace(0.0, 1.0, 11):
            pair = two_sided_pair(x, 0.3)
            assert 0.7 * pair.e1 + 0.3 * pair.e2 == pytest.approx(1.0)

    def test_map_observation_dispatch(self):
        diff = ProblemSpec(kind=ProblemKind.DIFF_MEANS)
        assert map_observation(diff, 1.0, 0.0).as_tuple() == (0.0, 2.0)
        with pytest.raises(DomainError):
            map_observation(diff, 1.0)
        assert to_unit_observation(diff, 1.0, 0.0) == 1.0
        assert to_unit_observation(ProblemSpec.parse("bounded1:0.2"), 0.7) == 0.7


class TestGamma:
    def test_centre_and_endpoints(self):
        assert gamma_to_lambda(0.0, 0.3).lam == pytest.approx(0.3)
        lo, hi = gamma_range(0.3)
        assert gamma_to_lambda(hi, 0.3).lam == pytest.approx(1.0)
        assert gamma_to_lambda(lo, 0.3).lam == pytest.approx(0.0)

    def test_known_value(self):
        assert gamma_to_lambda(0.47619, 0.3).lam == pytest.approx(0.4, abs=1e-5)
        assert lambda_to_gamma(0.4, 0.3) == pytest.approx(0.47619, abs=1e-5)

    def test_out_of_range(self):
        with pytest.raises(DomainError):
            gamma_to_lambda(5.0, 0.3)
        with pytest.raises(DomainError):
            lambda_to_gamma(1.1, 0.3)

    def test_problem_conventions(self):
        one_sided = ProblemSpec.parse("bounded1:0.25")
        assert problem_gamma_range(one_sided) == (0.0, 4.0)
        assert problem_gamma_to_lambda(one_sided, 2.0).lam == pytest.approx(0.5)
        assert problem_lambda_to_gamma(one_sided, 0.5) == pytest.approx(2.0)
        with pytest.raises(DomainError):
            problem_gamma_to_lambda(one_sided, -0.5)

        diff = ProblemSpec.parse("diffmeans")
        assert problem_gamma_range(diff) == (-1.0, 1.0)
        assert problem_gamma_to_lambda(diff, 0.0).lam == 0.5
        assert problem_lambda_to_gamma(diff, 1.0) == 1.0

        two_sided = ProblemSpec.parse("bounded2:0.3")
        assert problem_gamma_to_lambda(two_sided, 0.47619).lam == pytest.approx(0.4, abs=1e-5)


class TestProblemSpec:
    def test_parse(self):
        spec = ProblemSpec.parse("bounded2:0.3")
        assert spec.kind == ProblemKind.BOUNDED_TWO_SIDED
        assert spec.mu0 == 0.3
        assert spec.label == "bounded2:0.3"
        assert ProblemSpec.parse(" Bounded1:0.25 ").label == "bounded1:0.25"
        diff = ProblemSpec.parse("diffmeans")
        assert diff.mu0 == 0.5
        assert diff.is_paired

    @pytest.mark.parametrize("text", ["bounded3:0.3", "bounded2", "bounded2:abc", "bounded2:1.0", "bounded1:0"])
    def test_parse_errors(self, text):
        with pytest.raises(ConfigError):
            ProblemSpec.parse(text)

    def test_diff_means_is_centred(self):
        with pytest.raises(ValueError):
            ProblemSpec(kind=ProblemKind.DIFF_MEANS, mu0=0.3)


class TestPairArrays:
    def test_matches_scalar_map(self):
        problem = ProblemSpec.parse("bounded2:0.3")
        x = np.array([0.0, 0.3, 1.0])
        e1, e2 = pair_arrays(problem, x)
        for i, xi in enumerate(x):
            assert (e1[i], e2[i]) == pytest.approx(two_sided_pair(xi, 0.3).as_tuple())

    def test_one_sided(self):
        e1, e2 = pair_arrays(ProblemSpec.parse("bounded1:0.5"), np.array([0.0, 1.0]))
        np.testing.assert_allclose(e1, [1.0, 1.0])
        np.testing.assert_allclose(e2, [0.0, 2.0])

    def test_diff_means(self):
        e1, e2 = pair_arrays(ProblemSpec.parse("diffmeans"), np.array([0.3, 1.0]), np.array([0.8, 0.0]))
        np.testing.assert_allclose(e1, [1.5, 0.0])
        np.testing.assert_allclose(e2, [0.5, 2.0])

    def test_errors(self):
        diff = ProblemSpec.parse("diffmeans")
        with pytest.raises(DomainError):
            pair_arrays(diff, np.array([0.5]))
        with pytest.raises(DomainError):
            pair_arrays(diff, np.array([0.5, 0.2]), np.array([0.5]))
        with pytest.raises(DomainError):
            pair_arrays(diff, np.array([0.5]), np.array([1.5]))
        with pytest.raises(DomainError):
            pair_arrays(ProblemSpec.parse("bounded2:0.5"), np.array([-0.5]))


class TestNullProperties:
    @pytest.mark.parametrize("mu0", [0.0, 1.0, -0.2, 1.5])
    def test_degenerate_null_mean(self, mu0):
        with pytest.raises(ValueError):
            two_sided_pair(0.5, mu0)
        with pytest.raises(ValueError):
            one_sided_pair(0.5, mu0)
        with pytest.raises(ValueError):
            gamma_range(mu0)
        with pytest.raises(ValueError):
            lambda_to_gamma(0.5, mu0)

    def test_diff_means_is_two_sided_at_one_half(self):
        rng = np.random.default_rng(5)
        for x, y in rng.uniform(0.0, 1.0, size=(200, 2)):
            expected = two_sided_pair((x - y + 1.0) / 2.0, 0.5).as_tuple()
            assert diff_means_pair(x, y).as_tuple() == pytest.approx(expected, abs=1e-12)

    @pytest.mark.parametrize("seed", range(10))
    def test_random_null_has_unit_expectation(self, seed):
        rng = np.random.default_rng(seed)
        mu0 = rng.uniform(0.05, 0.95)
        # mixture of two-point laws, each with mean mu0
        low = rng.uniform(0.0, mu0, 8)
        high = rng.uniform(mu0, 1.0, 8)
        w = rng.dirichlet(np.ones(8))
        values = np.concatenate([low, high])
        probs = np.concatenate([w * (high - mu0) / (high - low), w * (mu0 - low) / (high - low)])
        assert probs.sum() == pytest.approx(1.0)
        assert np.dot(probs, values) == pytest.approx(mu0)

        pairs = [two_sided_pair(v, mu0) for v in values]
        assert sum(p * pair.e1 for p, pair in zip(probs, pairs)) == pytest.approx(1.0, abs=1e-12)
        assert sum(p * pair.e2 for p, pair in zip(probs, pairs)) == pytest.approx(1.0, abs=1e-12)
        assert sum(p * one_sided_pair(v, mu0).e2 for p, v in zip(probs, values)) == pytest.approx(1.0, abs=1e-12)

    def test_gamma_martingale_matches_mixture_pathwise(self):
        rng = np.random.default_rng(8)
        for problem in (ProblemSpec.parse("bounded2:0.3"), ProblemSpec.parse("bounded1:0.4"), ProblemSpec.parse("diffmeans")):
            lo, hi = problem_gamma_range(problem)
            x = rng.uniform(0.0, 1.0, 500)
            y = rng.uniform(0.0, 1.0, 500) if problem.is_paired else None
            gammas = rng.uniform(lo / 2.0, hi / 2.0, 500)
            e1, e2 = pair_arrays(problem, x, y)
            lam = np.array([problem_gamma_to_lambda(problem, g).lam for g in gammas])
            centred = x - y if problem.is_paired else x - problem.mu0
            mixture = np.cumsum(np.log((1.0 - lam) * e1 + lam * e2))
            martingale = np.cumsum(np.log1p(gammas * centred))
            np.testing.assert_allclose(mixture, martingale, rtol=0.0, atol=1e-10)
