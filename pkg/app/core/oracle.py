"""Log-optimal bets for finite-support alternatives, and closed-form growth and rejection-time bounds."""
import logging
import math
from typing import Optional, Union

import numpy as np
from scipy.special import xlogy

from app.core.errors import DegenerateDistributionError, DomainError
from app.core.ledger import mix_many
from app.core.optimize import log_portfolio_value, maximize_log_portfolio
from app.core.problems import problem_lambda_to_gamma
from app.models.distribution import FiniteDistribution
from app.models.evalue import Bet
from app.models.oracle import ConservativeBounds, OracleSolution
from app.models.problem import ProblemKind

logger = logging.getLogger(__name__)

REGIME_TOL = 1e-12


def _lam(bet: Union[Bet, float]) -> float:
    return bet.lam if isinstance(bet, Bet) else float(bet)


def ell(dist: FiniteDistribution, bet: Union[Bet, float]) -> float:
    """Expected log wealth increment of a constant bet under dist."""
    e1, e2, probs = dist.arrays()
    return log_portfolio_value(_lam(bet), e1, e2, probs)


def solve(dist: FiniteDistribution, lam_range: tuple[float, float] = (0.0, 1.0)) -> OracleSolution:
    """Maximise ell over lam_range (the whole of [0, 1] by default)."""
    lo, hi = lam_range
    if not 0.0 <= lo <= hi <= 1.0:
        raise DomainError(f"bet range [{lo}, {hi}] is not inside [0, 1]")
    e1, e2, probs = dist.arrays()
    lam, _ = maximize_log_portfolio(e1, e2, probs, lam_range=(lo, hi))
    ell_star = ell(dist, lam)
    if ell_star == -math.inf:
        raise DegenerateDistributionError(
            "Expected log-growth is -inf for every bet: the alternative puts mass on a pair with e1 = e2 = 0"
        )

    gamma_star = None
    if dist.problem is not None:
        gamma_star = problem_lambda_to_gamma(dist.problem, lam)
    return OracleSolution(lambda_star=Bet(lam=lam), gamma_star=gamma_star, ell_star=ell_star)


def numeraire_check(
    dist: FiniteDistribution,
    bet: Union[Bet, float],
    solution: Optional[OracleSolution] = None,
) -> float:
    """E[mix(lambda)/mix(lambda*)] over the atoms; at most 1 when lambda* is log-optimal."""
    solution = solution or solve(dist)
    e1, e2, probs = dist.arrays()
    numerator = mix_many(_lam(bet), e1, e2)
    denominator = mix_many(solution.lambda_star.lam, e1, e2)

    ratios = []
    for num, den in zip(numerator.tolist(), denominator.tolist()):
        if den > 0.0:
            ratios.append(num / den)
        elif num > 0.0:
            logger.warning("Oracle bet %.6g has zero wealth on an atom another bet survives", solution.lambda_star.lam)
            return math.inf
        else:
            ratios.append(0.0)
    weights = probs.tolist()
    return math.fsum(p * r for p, r in zip(weights, ratios)) / math.fsum(weights)


def rejection_time_bound(alpha: float, ell: float) -> float:
    """log(1/alpha)/ell: the small-alpha benchmark for the expected rejection time."""
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha={alpha!r} outside (0, 1)")
    if ell <= 0.0:
        raise DomainError("null-side alternative: no finite bound")
    return math.log(1.0 / alpha) / ell


def conservative_bounds(delta: float, sigma_sq: Optional[float] = None) -> ConservativeBounds:
    """Growth lower bound and rescaled rejection-time upper bound from a mean shift delta.

    With a variance, the sharper pair needs |delta| <= (1 - sqrt(1 - 4 sigma^2))/2.
    """
    if abs(delta) > 1.0:
        raise DomainError(f"delta={delta!r} outside [-1, 1]")
    d2 = delta * delta

    if sigma_sq is None:
        if d2 == 0.0:
            return ConservativeBounds(growth_lower=0.0, rejection_upper=math.inf, delta=delta)
        return ConservativeBounds(
            growth_lower=d2 / (1.0 + 4.0 * d2),
            rejection_upper=4.0 + 1.0 / d2,
            delta=delta,
        )

    if not 0.0 <= sigma_sq <= 0.25:
        raise DomainError(f"sigma_sq={sigma_sq!r} outside [0, 1/4]")
    limit = (1.0 - math.sqrt(1.0 - 4.0 * sigma_sq)) / 2.0
    if abs(delta) > limit + REGIME_TOL:
        raise DomainError(
            f"|delta|={abs(delta):.6g} exceeds {limit:.6g}; the variance bound needs |delta| <= (1 - sqrt(1 - 4 sigma^2))/2"
        )
    if d2 == 0.0:
        return ConservativeBounds(growth_lower=0.0, rejection_upper=math.inf, delta=delta, sigma_sq=sigma_sq)
    return ConservativeBounds(
        growth_lower=d2 / (4.0 * (sigma_sq + d2)),
        rejection_upper=4.0 + 4.0 * sigma_sq / d2,
        delta=delta,
        sigma_sq=sigma_sq,
    )


def ons_rejection_time_bound(alpha: float, delta: float) -> float:
    """Earlier ONS bound on the expected rejection time: 81/delta^2 log(162/(delta^2 alpha)) + pi^2/2."""
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha={alpha!r} outside (0, 1)")
    d2 = delta * delta
    if d2 == 0.0:
        return math.inf
    return 81.0 / d2 * math.log(162.0 / (d2 * alpha)) + math.pi ** 2 / 2.0


def ons_rejection_slope(delta: float) -> float:
    """Limit of the ONS bound divided by log(1/alpha) as alpha -> 0."""
    d2 = delta * delta
    return math.inf if d2 == 0.0 else 81.0 / d2


def kl_bernoulli(q: float, mu0: float) -> float:
    """KL(Bernoulli(q) || Bernoulli(mu0)); the optimal growth for two-sided Bernoulli data."""
    return float(xlogy(q, q / mu0) + xlogy(1.0 - q, (1.0 - q) / (1.0 - mu0)))


def mean_difference(dist: FiniteDistribution) -> tuple[float, float]:
    """(delta, variance) of the centred observation under dist.

    Bounded problems centre x at mu0; diff-means uses d = x - y, so delta is E[d].
    """
    if dist.problem is None:
        raise DomainError("mean_difference needs a distribution with a problem attached")
    units = []
    for atom in dist.atoms:
        if atom.x is None:
            raise DomainError("mean_difference needs the raw observation of every atom")
        if dist.problem.kind == ProblemKind.DIFF_MEANS:
            units.append(atom.x - atom.y)
        else:
            units.append(atom.x - dist.problem.mu0)
    z = np.array(units)
    probs = np.array([atom.prob for atom in dist.atoms])
    mean = float(np.dot(probs, z))
    variance = float(np.dot(probs, (z - mean) ** 2))
    return mean, variance
