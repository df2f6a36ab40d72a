import numpy as np
import pytest

from app.core.errors import ConfigError
from app.models.distribution import SourceDistribution
from app.models.problem import ProblemSpec
from app.utils.rng import AUDIT_STREAM, DATA_STREAM, replication_rng
from app.utils.sampling import draw_observations, to_finite


def test_bernoulli_draws():
    x, y = draw_observations(
        ProblemSpec.parse("bounded2:0.3"), SourceDistribution(kind="bernoulli", p=0.4), replication_rng(1, 0), 5000
    )
    assert y is None
    assert set(np.unique(x)) <= {0.0, 1.0}
    assert x.mean() == pytest.approx(0.4, abs=0.03)


def test_beta_draws_stay_in_unit_interval():
    x, _ = draw_observations(
        ProblemSpec.parse("bounded1:0.5"), SourceDistribution(kind="beta", a=2, b=5), replication_rng(1, 0), 1000
    )
    assert np.all((x >= 0.0) & (x <= 1.0))


@pytest.mark.parametrize(
    "source, mean, tol",
    [
        (SourceDistribution(kind="bernoulli", p=0.3), 0.3, 0.005),
        (SourceDistribution(kind="beta", a=2, b=5), 2.0 / 7.0, 0.002),
    ],
)
def test_large_draws_match_the_source_mean(source, mean, tol):
    x, _ = draw_observations(ProblemSpec.parse("bounded2:0.3"), source, replication_rng(4, 0), 200_000)
    assert x.mean() == pytest.approx(mean, abs=tol)


def test_discrete_draws_use_support():
    source = SourceDistribution(kind="discrete", values=[0.1, 0.7], probs=[0.2, 0.8])
    x, _ = draw_observations(ProblemSpec.parse("bounded2:0.5"), source, replication_rng(2, 3), 200)
    assert set(np.unique(x)) <= {0.1, 0.7}


def test_diff_means_draws():
    problem = ProblemSpec.parse("diffmeans")
    source = SourceDistribution.model_validate(
        {"kind": "bernoulli", "p": 0.6, "y_source": {"kind": "bernoulli", "p": 0.4}}
    )
    x, y = draw_observations(problem, source, replication_rng(3, 0), 100)
    assert x.shape == y.shape == (100,)

    paired = SourceDistribution(kind="discrete", values=[[1.0, 0.0], [0.2, 0.4]], probs=[0.5, 0.5])
    x, y = draw_observations(problem, paired, replication_rng(3, 0), 50)
    assert set(zip(x.tolist(), y.tolist())) <= {(1.0, 0.0), (0.2, 0.4)}


def test_shape_mismatches():
    with pytest.raises(ConfigError):
        draw_observations(ProblemSpec.parse("diffmeans"), SourceDistribution(kind="bernoulli", p=0.5), replication_rng(0, 0), 3)
    paired = SourceDistribution(kind="discrete", values=[[1.0, 0.0]], probs=[1.0])
    with pytest.raises(ConfigError):
        draw_observations(ProblemSpec.parse("bounded2:0.5"), paired, replication_rng(0, 0), 3)
    with pytest.raises(ConfigError):
        to_finite(paired, ProblemSpec.parse("bounded2:0.5"))


def test_beta_is_binned_for_the_oracle():
    dist = to_finite(SourceDistribution(kind="beta", a=2, b=5, bins=50), ProblemSpec.parse("bounded2:0.5"))
    assert len(dist.atoms) == 50
    mean = sum(atom.prob * atom.x for atom in dist.atoms)
    assert mean == pytest.approx(2.0 / 7.0, abs=1e-3)


def test_independent_samples_form_a_product():
    source = SourceDistribution.model_validate(
        {"kind": "bernoulli", "p": 0.6, "y_source": {"kind": "bernoulli", "p": 0.4}}
    )
    dist = to_finite(source, ProblemSpec.parse("diffmeans"))
    assert len(dist.atoms) == 4
    probs = {(atom.x, atom.y): atom.prob for atom in dist.atoms}
    assert probs[(1.0, 0.0)] == pytest.approx(0.36)


class TestRng:
    def test_reproducible(self):
        a = replication_rng(42, 3).random(5)
        b = replication_rng(42, 3).random(5)
        np.testing.assert_array_equal(a, b)

    def test_streams_and_replications_differ(self):
        base = replication_rng(42, 3, DATA_STREAM).random(5)
        assert not np.array_equal(base, replication_rng(42, 3, AUDIT_STREAM).random(5))
        assert not np.array_equal(base, replication_rng(42, 4).random(5))
        assert not np.array_equal(base, replication_rng(43, 3).random(5))
