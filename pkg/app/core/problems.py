"""Observation to e-value pair mappings and the gamma/lambda reparameterization."""
from typing import Optional

import numpy as np

from app.core.errors import DomainError
from app.models.evalue import Bet, EValuePair
from app.models.problem import ProblemKind, ProblemSpec

_RANGE_TOL = 1e-12


def _check_unit(value: float, name: str) -> float:
    if not 0.0 <= value <= 1.0:
        raise DomainError(f"{name}={value!r} outside [0, 1]")
    return float(value)


def _check_mu0(mu0: float) -> float:
    if not 0.0 < mu0 < 1.0:
        raise DomainError(f"mu0={mu0!r} outside (0, 1)")
    return float(mu0)


def two_sided_pair(x: float, mu0: float) -> EValuePair:
    """((1 - x)/(1 - mu0), x/mu0)."""
    x = _check_unit(x, "x")
    mu0 = _check_mu0(mu0)
    return EValuePair(e1=(1.0 - x) / (1.0 - mu0), e2=x / mu0)


def one_sided_pair(x: float, mu0: float) -> EValuePair:
    """Cash as the first asset, x/mu0 as the second."""
    x = _check_unit(x, "x")
    mu0 = _check_mu0(mu0)
    return EValuePair(e1=1.0, e2=x / mu0)


def diff_means_pair(x: float, y: float) -> EValuePair:
    x = _check_unit(x, "x")
    y = _check_unit(y, "y")
    d = x - y
    return EValuePair(e1=1.0 - d, e2=1.0 + d)


def gamma_range(mu0: float) -> tuple[float, float]:
    mu0 = _check_mu0(mu0)
    return -1.0 / (1.0 - mu0), 1.0 / mu0


def gamma_to_lambda(gamma: float, mu0: float) -> Bet:
    """lambda = mu0 + gamma * mu0 * (1 - mu0) on the two-sided range."""
    lo, hi = gamma_range(mu0)
    if not lo - _RANGE_TOL <= gamma <= hi + _RANGE_TOL:
        raise DomainError(f"gamma={gamma!r} outside [{lo:.6g}, {hi:.6g}] for mu0={mu0:g}")
    lam = mu0 + gamma * mu0 * (1.0 - mu0)
    return Bet(lam=min(1.0, max(0.0, lam)))


def lambda_to_gamma(lam: float, mu0: float) -> float:
    mu0 = _check_mu0(mu0)
    lam = float(lam)
    if not 0.0 <= lam <= 1.0:
        raise DomainError(f"lambda={lam!r} outside [0, 1]")
    return (lam - mu0) / (mu0 * (1.0 - mu0))


def problem_gamma_range(problem: ProblemSpec) -> tuple[float, float]:
    if problem.kind == ProblemKind.BOUNDED_ONE_SIDED:
        return 0.0, 1.0 / problem.mu0
    if problem.kind == ProblemKind.DIFF_MEANS:
        return -1.0, 1.0
    return gamma_range(problem.mu0)


def problem_gamma_to_lambda(problem: ProblemSpec, gamma: float) -> Bet:
    """Map a bet in the problem's own gamma convention to the portfolio scale."""
    if problem.kind == ProblemKind.BOUNDED_TWO_SIDED:
        return gamma_to_lambda(gamma, problem.mu0)

    lo, hi = problem_gamma_range(problem)
    if not lo - _RANGE_TOL <= gamma <= hi + _RANGE_TOL:
        raise DomainError(f"gamma={gamma!r} outside [{lo:.6g}, {hi:.6g}] for {problem.label}")
    if problem.kind == ProblemKind.BOUNDED_ONE_SIDED:
        lam = gamma * problem.mu0
    else:
        lam = (1.0 + gamma) / 2.0
    return Bet(lam=min(1.0, max(0.0, lam)))


def problem_lambda_to_gamma(problem: ProblemSpec, lam: float) -> float:
    if problem.kind == ProblemKind.BOUNDED_TWO_SIDED:
        return lambda_to_gamma(lam, problem.mu0)
    lam = float(lam)
    if not 0.0 <= lam <= 1.0:
        raise DomainError(f"lambda={lam!r} outside [0, 1]")
    if problem.kind == ProblemKind.BOUNDED_ONE_SIDED:
        return lam / problem.mu0
    return 2.0 * lam - 1.0


def map_observation(problem: ProblemSpec, x: float, y: Optional[float] = None) -> EValuePair:
    if problem.kind == ProblemKind.BOUNDED_TWO_SIDED:
        return two_sided_pair(x, problem.mu0)
    if problem.kind == ProblemKind.BOUNDED_ONE_SIDED:
        return one_sided_pair(x, problem.mu0)
    if y is None:
        raise DomainError("diff_means observations need both x and y")
    return diff_means_pair(x, y)


def to_unit_observation(problem: ProblemSpec, x: float, y: Optional[float] = None) -> float:
    """The scalar the gamma-scale recursions see: x itself, or (x - y + 1)/2 for paired data."""
    if problem.kind == ProblemKind.DIFF_MEANS:
        if y is None:
            raise DomainError("diff_means observations need both x and y")
        return (x - y + 1.0) / 2.0
    return x


def pair_arrays(
    problem: ProblemSpec, x: np.ndarray, y: Optional[np.ndarray] = None
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised map_observation; returns (e1, e2) arrays."""
    x = np.asarray(x, dtype=float)
    if x.size and (x.min() < 0.0 or x.max() > 1.0):
        raise DomainError("observations x outside [0, 1]")

    if problem.kind == ProblemKind.BOUNDED_TWO_SIDED:
        return (1.0 - x) / (1.0 - problem.mu0), x / problem.mu0
    if problem.kind == ProblemKind.BOUNDED_ONE_SIDED:
        return np.ones_like(x), x / problem.mu0

    if y is None:
        raise DomainError("diff_means observations need both x and y")
    y = np.asarray(y, dtype=float)
    if y.shape != x.shape:
        raise DomainError(f"x and y shapes differ: {x.shape} vs {y.shape}")
    if y.size and (y.min() < 0.0 or y.max() > 1.0):
        raise DomainError("observations y outside [0, 1]")
    d = x - y
    return 1.0 - d, 1.0 + d


def unit_arrays(problem: ProblemSpec, x: np.ndarray, y: Optional[np.ndarray] = None) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if problem.kind == ProblemKind.DIFF_MEANS:
        return (x - np.asarray(y, dtype=float) + 1.0) / 2.0
    return x
