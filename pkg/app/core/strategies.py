"""Predictable betting strategies.

Each strategy has an immutable state snapshot with pure bet/update functions,
and a stateful adapter (BettingStrategy) the experiment runner drives.
"""
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.special import logsumexp, roots_chebyt

from app.core.errors import ConfigError, DomainError
from app.core.ledger import (
    HindsightTracker,
    LogWealthLedger,
    best_hindsight,
    ledger_update,
    log_mix,
    mix_many,
)
from app.models.evalue import Bet, EValuePair
from app.models.problem import ProblemKind, ProblemSpec

logger = logging.getLogger(__name__)

DEFAULT_UP_NODES = 513
ONS_STEP = 2.0 / (2.0 - math.log(3.0))
ONS_GAMMA_BOUND = 0.5
DEFAULT_BET = 0.5

EPROCESS_TRACKS = ("co96", "oj23")
_SIMPLE_NAMES = ("up", "ons", "ftl", "oracle")


# --- universal portfolio ---------------------------------------------------

@dataclass(frozen=True, eq=False)
class UPState:
    """Beta(1/2, 1/2) mixture over constant bets, discretised on quadrature nodes."""

    nodes: np.ndarray
    log_node_wealth: np.ndarray
    log_weights: np.ndarray
    n: int = 0

    @property
    def k(self) -> int:
        return int(self.nodes.size)

    @property
    def ruined(self) -> bool:
        return bool(np.all(np.isneginf(self.log_node_wealth)))

    def mixture_log_wealth(self) -> float:
        with np.errstate(divide="ignore", invalid="ignore"):
            return float(logsumexp(self.log_node_wealth + self.log_weights))


def arcsine_nodes(k: int = DEFAULT_UP_NODES) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Chebyshev nodes mapped to (0, 1) with normalised weights.

    Exact for polynomial integrands of degree below 2k under the Beta(1/2, 1/2) law.
    """
    if k < 2:
        raise DomainError(f"Universal portfolio needs at least 2 nodes, got {k}")
    roots, weights = roots_chebyt(k)
    order = np.argsort(roots)
    nodes = (1.0 + roots[order]) / 2.0
    weights = weights[order] / weights.sum()
    return nodes, weights


def up_initial_state(k: int = DEFAULT_UP_NODES) -> UPState:
    nodes, weights = arcsine_nodes(k)
    return UPState(nodes=nodes, log_node_wealth=np.zeros(k), log_weights=np.log(weights))


def _up_lambda(log_node_wealth: np.ndarray, nodes: np.ndarray, log_weights: np.ndarray) -> Optional[float]:
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = log_node_wealth + log_weights
        log_total = logsumexp(scaled)
        if not np.isfinite(log_total):
            return None
        lam = math.exp(logsumexp(scaled, b=nodes) - log_total)
    return min(1.0, max(0.0, lam))


def up_bet(state: UPState) -> Bet:
    lam = _up_lambda(state.log_node_wealth, state.nodes, state.log_weights)
    if lam is None:
        logger.warning("Universal portfolio is ruined at n=%d; betting %.1f", state.n, DEFAULT_BET)
        return Bet(lam=DEFAULT_BET)
    return Bet(lam=lam)


def up_update(state: UPState, pair: EValuePair) -> UPState:
    with np.errstate(divide="ignore"):
        gains = np.log(mix_many(state.nodes, pair.e1, pair.e2))
    return replace(state, log_node_wealth=state.log_node_wealth + gains, n=state.n + 1)


def up_log_wealth_path(
    state: UPState, e1: np.ndarray, e2: np.ndarray, block: int = 512
) -> tuple[np.ndarray, UPState]:
    """Mixture log-wealth after each of the given pairs, evaluated block-wise."""
    e1 = np.asarray(e1, dtype=float)
    e2 = np.asarray(e2, dtype=float)
    path = np.empty(e1.size)
    current = state.log_node_wealth
    for start in range(0, e1.size, block):
        stop = min(start + block, e1.size)
        with np.errstate(divide="ignore", invalid="ignore"):
            gains = np.log(mix_many(state.nodes[None, :], e1[start:stop, None], e2[start:stop, None]))
            cumulative = current[None, :] + np.cumsum(gains, axis=0)
            path[start:stop] = logsumexp(cumulative + state.log_weights[None, :], axis=1)
        current = cumulative[-1]
    return path, replace(state, log_node_wealth=current, n=state.n + e1.size)


# --- online Newton step ------------------------------------------------------

@dataclass(frozen=True)
class ONSState:
    """Online Newton step on the martingale prod(1 + gamma c_i) over centred increments c_i."""

    mu0: float
    gamma: float = 0.0
    sum_sq: float = 0.0
    last_z: float = 0.0
    lower: float = -ONS_GAMMA_BOUND
    upper: float = ONS_GAMMA_BOUND
    n: int = 0


def ons_initial_state(mu0: float, lower: float = -ONS_GAMMA_BOUND) -> ONSState:
    return ONSState(mu0=mu0, lower=lower)


def ons_bet(state: ONSState) -> Bet:
    """lambda = mu0 + gamma mu0 (1 - mu0)."""
    lam = state.mu0 + state.gamma * state.mu0 * (1.0 - state.mu0)
    return Bet(lam=min(1.0, max(0.0, lam)))


def ons_lambda_range(problem: ProblemSpec) -> tuple[float, float]:
    """Bets an ONS player can reach under the gamma clamp."""
    mu0 = problem.mu0
    if problem.kind == ProblemKind.BOUNDED_ONE_SIDED:
        return 0.0, ONS_GAMMA_BOUND * mu0
    if problem.kind == ProblemKind.DIFF_MEANS:
        return (1.0 - ONS_GAMMA_BOUND) / 2.0, (1.0 + ONS_GAMMA_BOUND) / 2.0
    half_width = ONS_GAMMA_BOUND * mu0 * (1.0 - mu0)
    return mu0 - half_width, mu0 + half_width


def ons_update(state: ONSState, x: float) -> ONSState:
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"ONS observation x={x!r} outside [0, 1]")
    return ons_step(state, x - state.mu0)


def ons_step(state: ONSState, centred: float) -> ONSState:
    """One ONS step on the martingale increment: wealth is multiplied by 1 + gamma * centred."""
    z = -centred / (1.0 + state.gamma * centred)
    sum_sq = state.sum_sq + z * z
    gamma = state.gamma - ONS_STEP * z / (1.0 + sum_sq)
    gamma = min(state.upper, max(state.lower, gamma))
    return replace(state, gamma=gamma, sum_sq=sum_sq, last_z=z, n=state.n + 1)


# --- follow the leader -----------------------------------------------------

@dataclass(frozen=True, eq=False)
class FTLState:
    ledger: LogWealthLedger = field(default_factory=LogWealthLedger)
    default_bet: Bet = field(default_factory=lambda: Bet(lam=DEFAULT_BET))


def ftl_bet(state: FTLState) -> Bet:
    if state.ledger.n == 0:
        return state.default_bet
    bet, _ = best_hindsight(state.ledger)
    return bet


def ftl_update(state: FTLState, pair: EValuePair) -> FTLState:
    return replace(state, ledger=ledger_update(state.ledger, ftl_bet(state), pair))


# --- stateful adapters -----------------------------------------------------

class BettingStrategy(ABC):
    """A predictable strategy: bet() depends only on pairs passed to observe() so far."""

    name: str = "strategy"

    def __init__(self):
        self.log_wealth = 0.0
        self.n = 0

    @property
    @abstractmethod
    def lam(self) -> float:
        ...

    def bet(self) -> Bet:
        return Bet(lam=self.lam)

    @abstractmethod
    def _learn(self, e1: float, e2: float, x: float) -> None:
        ...

    def observe(self, e1: float, e2: float, x: float) -> float:
        """Settle the current bet on one pair, then learn from it. Returns the new log-wealth."""
        if self.log_wealth != -math.inf:
            self.log_wealth += log_mix(self.lam, e1, e2)
        self._learn(e1, e2, x)
        self.n += 1
        return self.log_wealth

    def log_wealth_path(self, e1: np.ndarray, e2: np.ndarray, x: np.ndarray) -> np.ndarray:
        path = np.empty(len(e1))
        for i, (a, b, u) in enumerate(zip(e1.tolist(), e2.tolist(), x.tolist())):
            path[i] = self.observe(a, b, u)
        return path


class UniversalPortfolio(BettingStrategy):
    name = "up"

    def __init__(self, k: int = DEFAULT_UP_NODES):
        super().__init__()
        self.state = up_initial_state(k)

    @property
    def lam(self) -> float:
        lam = _up_lambda(self.state.log_node_wealth, self.state.nodes, self.state.log_weights)
        return DEFAULT_BET if lam is None else lam

    def _learn(self, e1: float, e2: float, x: float) -> None:
        self.state = up_update(self.state, EValuePair(e1=e1, e2=e2))

    def log_wealth_path(self, e1: np.ndarray, e2: np.ndarray, x: np.ndarray) -> np.ndarray:
        # mixture wealth equals the product of mixture bets, so the block path is exact
        path, self.state = up_log_wealth_path(self.state, e1, e2)
        if path.size:
            self.log_wealth = float(path[-1])
        self.n += path.size
        return path


class OnlineNewtonStep(BettingStrategy):
    """ONS in each problem's own gamma scale.

    Bounded problems step on x - mu0; one-sided ones bet gamma * mu0 with gamma >= 0.
    Difference of means steps on d = x - y and bets (1 + gamma)/2.
    """

    name = "ons"

    def __init__(self, problem: ProblemSpec):
        super().__init__()
        self.kind = problem.kind
        lower = 0.0 if self.kind == ProblemKind.BOUNDED_ONE_SIDED else -ONS_GAMMA_BOUND
        self.state = ons_initial_state(problem.mu0, lower=lower)

    @property
    def lam(self) -> float:
        if self.kind == ProblemKind.BOUNDED_ONE_SIDED:
            return self.state.gamma * self.state.mu0
        if self.kind == ProblemKind.DIFF_MEANS:
            return (1.0 + self.state.gamma) / 2.0
        return ons_bet(self.state).lam

    def _learn(self, e1: float, e2: float, x: float) -> None:
        if self.kind == ProblemKind.DIFF_MEANS:
            # e1 = 1 - d, e2 = 1 + d
            d = (e2 - e1) / 2.0
            if not -1.0 <= d <= 1.0:
                raise DomainError(f"difference d={d!r} outside [-1, 1]")
            self.state = ons_step(self.state, d)
        else:
            self.state = ons_update(self.state, x)


class FollowTheLeader(BettingStrategy):
    name = "ftl"

    def __init__(self, default_bet: float = DEFAULT_BET):
        super().__init__()
        self.default_bet = default_bet
        self.tracker = HindsightTracker()

    @property
    def lam(self) -> float:
        if self.tracker.n == 0:
            return self.default_bet
        lam, _ = self.tracker.best()
        return lam

    def _learn(self, e1: float, e2: float, x: float) -> None:
        self.tracker.add(e1, e2)


class ConstantBet(BettingStrategy):
    def __init__(self, lam: float, name: Optional[str] = None):
        super().__init__()
        if not 0.0 <= lam <= 1.0:
            raise DomainError(f"Constant bet {lam!r} outside [0, 1]")
        self._lam = float(lam)
        self.name = name or f"const:{lam:g}"

    @property
    def lam(self) -> float:
        return self._lam

    def _learn(self, e1: float, e2: float, x: float) -> None:
        pass

    def log_wealth_path(self, e1: np.ndarray, e2: np.ndarray, x: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore"):
            path = np.cumsum(np.log(mix_many(self._lam, e1, e2)))
        if self.log_wealth == -math.inf:
            path[:] = -math.inf
        else:
            path += self.log_wealth
        if path.size:
            self.log_wealth = float(path[-1])
        self.n += path.size
        return path


def constant_bet(lam: float) -> ConstantBet:
    return ConstantBet(lam)


def validate_strategy_name(name: str, allow_tracks: bool = True) -> str:
    """Normalise a strategy name, raising ConfigError for unknown ones."""
    cleaned = name.strip().lower()
    if cleaned in _SIMPLE_NAMES or (allow_tracks and cleaned in EPROCESS_TRACKS):
        return cleaned
    if cleaned.startswith("const:"):
        try:
            lam = float(cleaned.split(":", 1)[1])
        except ValueError as e:
            raise ConfigError(f"Invalid constant bet in strategy '{name}': {e}") from e
        if not 0.0 <= lam <= 1.0:
            raise ConfigError(f"Constant bet in strategy '{name}' must lie in [0, 1]")
        return cleaned
    expected = ", ".join([*_SIMPLE_NAMES, *(EPROCESS_TRACKS if allow_tracks else ()), "const:<lambda>"])
    raise ConfigError(f"Unknown strategy '{name}': expected one of {expected}")


def make_strategy(
    name: str,
    problem: ProblemSpec,
    oracle_lambda: Optional[float] = None,
    up_nodes: int = DEFAULT_UP_NODES,
) -> BettingStrategy:
    cleaned = validate_strategy_name(name, allow_tracks=False)
    if cleaned == "up":
        return UniversalPortfolio(up_nodes)
    if cleaned == "ons":
        return OnlineNewtonStep(problem)
    if cleaned == "ftl":
        return FollowTheLeader()
    if cleaned == "oracle":
        if oracle_lambda is None:
            raise ConfigError("Strategy 'oracle' needs a finite-support alternative to solve for lambda*")
        return ConstantBet(oracle_lambda, name="oracle")
    return ConstantBet(float(cleaned.split(":", 1)[1]), name=cleaned)
