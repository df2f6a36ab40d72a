"""Drawing observations from source distributions and discretising them for the oracle."""
from typing import Optional

import numpy as np
from scipy import stats

from app.core.errors import ConfigError
from app.models.distribution import FiniteDistribution, SourceDistribution, SourceKind
from app.models.problem import ProblemSpec


def _draw_scalar(source: SourceDistribution, rng: np.random.Generator, size: int) -> np.ndarray:
    if source.kind == SourceKind.BERNOULLI:
        return (rng.random(size) < source.p).astype(float)
    if source.kind == SourceKind.BETA:
        return rng.beta(source.a, source.b, size)
    values = np.asarray(source.values, dtype=float)
    probs = np.asarray(source.probs, dtype=float)
    return values[rng.choice(values.size, size=size, p=probs / probs.sum())]


def draw_observations(
    problem: ProblemSpec, source: SourceDistribution, rng: np.random.Generator, size: int
) -> tuple[np.ndarray, Optional[np.ndarray]]:
    """Draw size observations; y is None unless the problem is paired."""
    if not problem.is_paired:
        if source.is_paired:
            raise ConfigError(f"Problem {problem.label} takes scalar observations, got paired support points")
        return _draw_scalar(source, rng, size), None

    if source.is_paired:
        points = np.asarray(source.values, dtype=float)
        probs = np.asarray(source.probs, dtype=float)
        picks = points[rng.choice(len(points), size=size, p=probs / probs.sum())]
        return picks[:, 0], picks[:, 1]
    if source.y_source is None:
        raise ConfigError("diff-means sources need paired support points or a y_source")
    x = _draw_scalar(source, rng, size)
    y = _draw_scalar(source.y_source, rng, size)
    return x, y


def _scalar_support(source: SourceDistribution) -> tuple[list[float], list[float]]:
    if source.kind == SourceKind.BERNOULLI:
        return [1.0, 0.0], [source.p, 1.0 - source.p]
    if source.kind == SourceKind.BETA:
        edges = np.linspace(0.0, 1.0, source.bins + 1)
        masses = np.diff(stats.beta.cdf(edges, source.a, source.b))
        mids = (edges[:-1] + edges[1:]) / 2.0
        return mids.tolist(), masses.tolist()
    return [float(v) for v in source.values], list(source.probs)


def to_finite(source: SourceDistribution, problem: ProblemSpec) -> FiniteDistribution:
    """Finite-support version of the source mapped under the problem; beta sources are binned."""
    if not problem.is_paired:
        if source.is_paired:
            raise ConfigError(f"Problem {problem.label} takes scalar observations, got paired support points")
        values, probs = _scalar_support(source)
        return FiniteDistribution.from_values(values, probs, problem)

    if source.is_paired:
        return FiniteDistribution.from_values([tuple(v) for v in source.values], list(source.probs), problem)
    if source.y_source is None:
        raise ConfigError("diff-means sources need paired support points or a y_source")
    xs, px = _scalar_support(source)
    ys, py = _scalar_support(source.y_source)
    values = [(x, y) for x in xs for y in ys]
    probs = [p * q for p in px for q in py]
    return FiniteDistribution.from_values(values, probs, problem)
