"""Regret bounds, regret-subtracted e-processes and the level-alpha sequential test."""
import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Union

import numpy as np
from scipy.special import gammaln, xlogy

from app.core.errors import DomainError
from app.core.ledger import LogWealthLedger, best_hindsight
from app.models.evalue import Bet

logger = logging.getLogger(__name__)

LOG_2 = math.log(2.0)
LOG_PI = math.log(math.pi)
ORDERING_SLACK = 1e-9


class EProcessKind(str, Enum):
    UP = "up"
    CO96 = "co96"
    OJ23 = "oj23"


def regret(ledger: LogWealthLedger) -> float:
    """Best constant-bet log-wealth in hindsight minus the ledger's own log-wealth."""
    _, best = best_hindsight(ledger)
    if best == -math.inf:
        return 0.0
    return best - ledger.log_wealth


def co96_bound(n: Union[int, np.ndarray]) -> Union[float, np.ndarray]:
    """log(n + 1)/2 + log 2, using the n = 2 value below n = 2."""
    if isinstance(n, np.ndarray):
        return np.log(np.maximum(n, 2) + 1.0) / 2.0 + LOG_2
    return math.log(max(n, 2) + 1.0) / 2.0 + LOG_2


def _oj23_terms(n: np.ndarray, j: np.ndarray, lam: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return (
            LOG_PI
            + xlogy(j, lam)
            + xlogy(n - j, 1.0 - lam)
            + gammaln(n + 1.0)
            - gammaln(j + 0.5)
            - gammaln(n - j + 0.5)
        )


def oj23_bound_many(n: np.ndarray, lam_max: np.ndarray) -> np.ndarray:
    """Vectorised oj23_bound.

    The term is concave in j with its maximum at ceil(lam n - 1/2), so only
    that index and its neighbours are evaluated.
    """
    n = np.asarray(n, dtype=float)
    lam = np.clip(np.asarray(lam_max, dtype=float), 0.0, 1.0)
    n, lam = np.broadcast_arrays(n, lam)
    centre = np.clip(np.ceil(lam * n - 0.5), 0.0, n)

    best = np.full(n.shape, -np.inf)
    for offset in (-1.0, 0.0, 1.0):
        j = np.clip(centre + offset, 0.0, n)
        best = np.maximum(best, _oj23_terms(n, j, lam))
    return np.where(n == 0, 0.0, best)


def oj23_bound(n: int, lambda_max: Union[Bet, float]) -> float:
    if n < 0:
        raise DomainError(f"n must be non-negative, got {n}")
    if n == 0:
        return 0.0
    lam = lambda_max.lam if isinstance(lambda_max, Bet) else float(lambda_max)
    return float(oj23_bound_many(np.array([n]), np.array([lam]))[0])


def eprocess_value(kind: EProcessKind, ledger: LogWealthLedger) -> float:
    """Log e-process value for a universal-portfolio ledger.

    UP is the ledger's own log-wealth; CO96 and OJ23 subtract a regret bound
    from the best constant-bet log-wealth of the same pairs.
    """
    kind = EProcessKind(kind)
    if kind == EProcessKind.UP:
        return ledger.log_wealth
    bet, best = best_hindsight(ledger)
    if kind == EProcessKind.CO96:
        return best - co96_bound(ledger.n)
    return best - oj23_bound(ledger.n, bet)


def regret_eprocess_paths(
    hindsight: np.ndarray, lam_max: np.ndarray, start_n: int = 1
) -> dict[EProcessKind, np.ndarray]:
    """CO96 and OJ23 log-values along a path of hindsight optima."""
    n = np.arange(start_n, start_n + len(hindsight), dtype=float)
    with np.errstate(invalid="ignore"):
        return {
            EProcessKind.CO96: hindsight - co96_bound(n),
            EProcessKind.OJ23: hindsight - oj23_bound_many(n, lam_max),
        }


def check_ordering(
    log_co96: np.ndarray,
    log_oj23: np.ndarray,
    log_up: np.ndarray,
    slack: float = ORDERING_SLACK,
) -> Optional[int]:
    """Index of the first step where CO96 <= OJ23 <= UP fails, or None."""
    with np.errstate(invalid="ignore"):
        bad = (log_co96 > log_oj23 + slack) | (log_oj23 > log_up + slack)
    hits = np.flatnonzero(bad)
    return int(hits[0]) if hits.size else None


def first_crossing(log_path: np.ndarray, log_threshold: float) -> Optional[int]:
    """1-based index of the first log-value at or above the threshold."""
    hits = np.flatnonzero(np.asarray(log_path) >= log_threshold)
    return int(hits[0]) + 1 if hits.size else None


@dataclass(frozen=True)
class SequentialTest:
    """Level-alpha test that rejects once the e-process reaches 1/alpha."""

    alpha: float
    horizon: int
    n: int = 0
    log_value: float = 0.0
    rejected: bool = False
    tau: Optional[int] = None
    censored: bool = False

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"alpha={self.alpha!r} outside (0, 1)")
        if self.horizon < 1:
            raise DomainError(f"horizon must be a positive integer, got {self.horizon}")

    @property
    def log_threshold(self) -> float:
        return math.log(1.0 / self.alpha)

    @property
    def finished(self) -> bool:
        return self.rejected or self.censored

    @property
    def outcome(self) -> Union[int, str]:
        if self.rejected:
            return self.tau
        if self.censored:
            return f"censored({self.horizon})"
        return f"running({self.n})"


def step_test(test: SequentialTest, log_value: float) -> SequentialTest:
    if test.finished:
        return test
    n = test.n + 1
    if log_value >= test.log_threshold:
        return replace(test, n=n, log_value=log_value, rejected=True, tau=n)
    return replace(test, n=n, log_value=log_value, censored=n >= test.horizon)
