"""Log-domain wealth accounting and best-in-hindsight evaluation."""
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from app.core.errors import DomainError
from app.core.optimize import (
    log_portfolio_slope,
    log_portfolio_value,
    maximize_log_portfolio,
)
from app.models.evalue import Bet, EValuePair

logger = logging.getLogger(__name__)


def mix(bet: Bet, pair: EValuePair) -> float:
    """Per-step wealth multiplier (1 - lambda) e1 + lambda e2."""
    return (1.0 - bet.lam) * pair.e1 + bet.lam * pair.e2


def mix_many(lam, e1: np.ndarray, e2: np.ndarray) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    return (1.0 - lam) * np.asarray(e1, dtype=float) + lam * np.asarray(e2, dtype=float)


def log_mix(lam: float, e1: float, e2: float) -> float:
    value = (1.0 - lam) * e1 + lam * e2
    return math.log(value) if value > 0.0 else -math.inf


@dataclass(frozen=True, eq=False)
class PairHistory:
    """Multiset of observed pairs: each distinct pair with its multiplicity."""

    e1: np.ndarray = field(default_factory=lambda: np.empty(0))
    e2: np.ndarray = field(default_factory=lambda: np.empty(0))
    counts: np.ndarray = field(default_factory=lambda: np.empty(0))
    _index: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def size(self) -> int:
        return int(self.counts.sum()) if self.counts.size else 0

    @property
    def distinct(self) -> int:
        return int(self.counts.size)

    def add(self, e1: float, e2: float) -> "PairHistory":
        key = (float(e1), float(e2))
        slot = self._index.get(key)
        if slot is not None:
            counts = self.counts.copy()
            counts[slot] += 1
            return PairHistory(self.e1, self.e2, counts, self._index)

        index = dict(self._index)
        index[key] = self.counts.size
        return PairHistory(
            np.append(self.e1, key[0]),
            np.append(self.e2, key[1]),
            np.append(self.counts, 1.0),
            index,
        )

    def pairs(self) -> list[tuple[float, float, int]]:
        return [(float(a), float(b), int(c)) for a, b, c in zip(self.e1, self.e2, self.counts)]


@dataclass(frozen=True, eq=False)
class LogWealthLedger:
    """Wealth of one betting process in log scale, plus the pairs it has seen.

    history is None in streaming mode, which disables hindsight evaluation.
    """

    n: int = 0
    log_wealth: float = 0.0
    history: Optional[PairHistory] = field(default_factory=PairHistory)

    @classmethod
    def streaming(cls) -> "LogWealthLedger":
        return cls(history=None)

    @property
    def ruined(self) -> bool:
        return self.log_wealth == -math.inf

    @property
    def retains_history(self) -> bool:
        return self.history is not None


def ledger_update(ledger: LogWealthLedger, bet: Bet, pair: EValuePair) -> LogWealthLedger:
    if ledger.log_wealth == -math.inf:
        log_wealth = -math.inf
    else:
        log_wealth = ledger.log_wealth + log_mix(bet.lam, pair.e1, pair.e2)
    history = ledger.history.add(pair.e1, pair.e2) if ledger.history is not None else None
    return LogWealthLedger(n=ledger.n + 1, log_wealth=log_wealth, history=history)


def _require_history(ledger: LogWealthLedger) -> PairHistory:
    if ledger.history is None:
        raise DomainError("Ledger was created in streaming mode; hindsight evaluation needs its history")
    return ledger.history


def best_hindsight(ledger: LogWealthLedger) -> tuple[Bet, float]:
    """Best constant bet for the pairs seen so far and its log-wealth."""
    history = _require_history(ledger)
    lam, value = maximize_log_portfolio(history.e1, history.e2, history.counts)
    return Bet(lam=lam), value


def hindsight_log_wealth(ledger: LogWealthLedger, lam: float) -> float:
    """Log-wealth a constant bet lam would have earned on the ledger's pairs."""
    history = _require_history(ledger)
    return log_portfolio_value(lam, history.e1, history.e2, history.counts)


class HindsightTracker:
    """Incremental best-in-hindsight maximiser.

    Pairs are accumulated in place; each query warm-starts a root-find on the
    slope from the previous optimum and falls back to a full search.
    """

    def __init__(self, capacity: int = 16):
        self._e1 = np.empty(capacity)
        self._e2 = np.empty(capacity)
        self._counts = np.zeros(capacity)
        self._index: dict[tuple[float, float], int] = {}
        self._distinct = 0
        self.n = 0
        self._has_null_pair = False
        self._all_flat = True
        self._lam = 0.5
        self._value = 0.0
        self._dirty = False

    def add(self, e1: float, e2: float) -> None:
        key = (float(e1), float(e2))
        slot = self._index.get(key)
        if slot is None:
            if self._distinct == self._e1.size:
                self._grow()
            slot = self._distinct
            self._index[key] = slot
            self._e1[slot], self._e2[slot] = key
            self._distinct += 1
        self._counts[slot] += 1.0
        self.n += 1
        self._has_null_pair = self._has_null_pair or (key[0] == 0.0 and key[1] == 0.0)
        self._all_flat = self._all_flat and key[0] == key[1]
        self._dirty = True

    def _grow(self) -> None:
        size = max(16, 2 * self._e1.size)
        self._e1 = np.resize(self._e1, size)
        self._e2 = np.resize(self._e2, size)
        counts = np.zeros(size)
        counts[: self._distinct] = self._counts[: self._distinct]
        self._counts = counts

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        k = self._distinct
        return self._e1[:k], self._e2[:k], self._counts[:k]

    def best(self) -> tuple[float, float]:
        """(lambda_max, best log-wealth) over all pairs added so far."""
        if not self._dirty:
            return self._lam, self._value
        e1, e2, w = self.arrays()

        if self._has_null_pair:
            lam, value = 0.5, -math.inf
        elif self._all_flat:
            lam, value = 0.5, log_portfolio_value(0.5, e1, e2, w)
        elif self._distinct <= 2:
            lam, value = self._few_pairs_optimum()
        else:
            lam = self._warm_root(e1, e2, w)
            if lam is None:
                lam, value = maximize_log_portfolio(e1, e2, w)
            else:
                value = log_portfolio_value(lam, e1, e2, w)

        self._lam, self._value, self._dirty = lam, value, False
        return lam, value

    def _few_pairs_optimum(self) -> tuple[float, float]:
        """Closed-form optimum when at most two distinct pairs have been seen.

        The slope sum c_i d_i / (a_i + lam d_i) is then a ratio of linear
        functions, so its root solves a linear equation.
        """
        terms = [
            (float(self._e1[i]), float(self._e2[i]) - float(self._e1[i]), float(self._counts[i]))
            for i in range(self._distinct)
        ]
        signs = {math.copysign(1.0, d) for _, d, _ in terms if d != 0.0}
        if signs == {1.0}:
            lam = 1.0
        elif signs == {-1.0}:
            lam = 0.0
        else:
            (a1, d1, c1), (a2, d2, c2) = terms
            lam = -(c1 * d1 * a2 + c2 * d2 * a1) / ((c1 + c2) * d1 * d2)
            lam = min(1.0, max(0.0, lam))

        value = 0.0
        for a, d, c in terms:
            wealth = a + lam * d
            if wealth <= 0.0:
                return lam, -math.inf
            value += c * math.log(wealth)
        return lam, value

    def _warm_root(self, e1: np.ndarray, e2: np.ndarray, w: np.ndarray) -> Optional[float]:
        def slope(lam: float) -> float:
            return log_portfolio_slope(lam, e1, e2, w)

        if slope(0.0) <= 0.0:
            return 0.0
        if slope(1.0) >= 0.0:
            return 1.0

        width = 1e-3
        while width < 1.0:
            a, b = max(0.0, self._lam - width), min(1.0, self._lam + width)
            ga, gb = slope(a), slope(b)
            if math.isfinite(ga) and math.isfinite(gb) and ga > 0.0 > gb:
                return brentq(slope, a, b, xtol=1e-15, maxiter=200)
            width *= 8.0
        return None

    def ledger_value(self, lam: float) -> float:
        e1, e2, w = self.arrays()
        return log_portfolio_value(lam, e1, e2, w)


HINDSIGHT_GRID = 1024
HINDSIGHT_CHUNK = 512


def _tangent_cap(
    x_end: np.ndarray,
    f_end: np.ndarray,
    d_end: np.ndarray,
    m: np.ndarray,
    fm: np.ndarray,
    dm: np.ndarray,
) -> np.ndarray:
    """Upper bound of a concave function on the segment between m and x_end.

    Uses the tangent at m alone, tightened by the tangent at x_end where that
    one is finite.
    """
    cap = fm + np.maximum(0.0, dm * (x_end - m))
    usable = np.isfinite(f_end) & np.isfinite(d_end) & (x_end != m)
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        cross = (f_end - fm + dm * m - d_end * x_end) / (dm - d_end)
        cross = np.where(np.isfinite(cross), cross, m)
        cross = np.clip(cross, np.minimum(m, x_end), np.maximum(m, x_end))
        candidates = [
            np.minimum(fm + dm * (x - m), f_end + d_end * (x - x_end)) for x in (m, x_end, cross)
        ]
        both = np.maximum.reduce(candidates)
    return np.where(usable, np.minimum(cap, both), cap)


def hindsight_envelope(
    e1: np.ndarray,
    e2: np.ndarray,
    grid_size: int = HINDSIGHT_GRID,
    chunk: int = HINDSIGHT_CHUNK,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-prefix (lower, upper) bounds on the best constant-bet log-wealth.

    lower is the best value on a uniform grid of bets and is attained by a
    grid bet. The objective is concave, so its maximiser lies between the grid
    neighbours of that point, where tangent lines cap it from above.
    """
    e1 = np.asarray(e1, dtype=float)
    e2 = np.asarray(e2, dtype=float)
    if np.any((e1 == 0.0) & (e2 == 0.0)):
        raise DomainError("hindsight_envelope needs pairs that are not both zero")
    grid = np.linspace(0.0, 1.0, grid_size + 1)
    lam = grid[:, None]
    lower = np.empty(e1.size)
    upper = np.empty(e1.size)
    f_run = np.zeros((grid.size, 1))
    d_run = np.zeros((grid.size, 1))

    for start in range(0, e1.size, chunk):
        a = e1[start : start + chunk]
        d = e2[start : start + chunk] - a
        mixed = a + lam * d
        with np.errstate(divide="ignore", invalid="ignore"):
            logs = np.log(mixed)
            slopes = np.where(d == 0.0, 0.0, d / mixed)
        values = f_run + np.cumsum(logs, axis=1)
        derivs = d_run + np.cumsum(slopes, axis=1)
        f_run, d_run = values[:, -1:], derivs[:, -1:]

        cols = np.arange(a.size)
        g = np.argmax(values, axis=0)
        m, fm, dm = grid[g], values[g, cols], derivs[g, cols]
        caps = []
        for k in (np.maximum(g - 1, 0), np.minimum(g + 1, grid_size)):
            caps.append(_tangent_cap(grid[k], values[k, cols], derivs[k, cols], m, fm, dm))
        lower[start : start + a.size] = fm
        upper[start : start + a.size] = np.maximum(caps[0], caps[1])
    return lower, upper
