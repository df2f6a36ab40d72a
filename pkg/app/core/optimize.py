"""One-dimensional maximisation of concave log-portfolio objectives on [0, 1]."""
import math
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
GOLDEN_TOL = 1e-12
GOLDEN_MAX_ITER = 200
_POLISH_WIDTHS = (1e-6, 1e-3, 1.0)


def golden_section_max(
    f: Callable[[float], float],
    lo: float = 0.0,
    hi: float = 1.0,
    tol: float = GOLDEN_TOL,
    max_iter: int = GOLDEN_MAX_ITER,
) -> tuple[float, float]:
    """Maximise a concave f on [lo, hi].

    Equal interior values (including both -inf) shrink the bracket from both
    sides, so a flat objective resolves to the midpoint. The endpoints are
    checked last and win only on a strictly larger value.
    """
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)

    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        elif fc < fd:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
        else:
            a, b = c, d
            c = b - INV_PHI * (b - a)
            d = a + INV_PHI * (b - a)
            fc, fd = f(c), f(d)

    best = (a + b) / 2.0
    best_value = f(best)
    for edge in (lo, hi):
        edge_value = f(edge)
        if edge_value > best_value:
            best, best_value = edge, edge_value
    return best, best_value


def log_portfolio_value(lam: float, e1: np.ndarray, e2: np.ndarray, weights: np.ndarray) -> float:
    """Sum of weights * log((1 - lam) e1 + lam e2); -inf when any weighted term is zero."""
    mixed = e1 + lam * (e2 - e1)
    with np.errstate(divide="ignore"):
        logs = np.log(mixed)
    return float(np.dot(weights, logs)) if np.all(np.isfinite(logs)) else -math.inf


def log_portfolio_slope(lam: float, e1: np.ndarray, e2: np.ndarray, weights: np.ndarray) -> float:
    d = e2 - e1
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = weights * d / (e1 + lam * d)
    # 0/0 only arises from a constant (d == 0) term, which contributes nothing
    terms = np.where(d == 0.0, 0.0, terms)
    return float(terms.sum())


def _polish(
    lam: float,
    lo: float,
    hi: float,
    slope: Callable[[float], float],
) -> Optional[float]:
    """Refine lam to a root of the slope with brentq, or None when no finite bracket is found."""
    for width in _POLISH_WIDTHS:
        a, b = max(lo, lam - width), min(hi, lam + width)
        ga, gb = slope(a), slope(b)
        if not math.isfinite(ga) and lam > a:
            a = (a + lam) / 2.0
            ga = slope(a)
        if not math.isfinite(gb) and lam < b:
            b = (b + lam) / 2.0
            gb = slope(b)
        if not (math.isfinite(ga) and math.isfinite(gb)):
            continue
        if ga == 0.0:
            return a
        if gb == 0.0:
            return b
        if ga > 0.0 > gb:
            return brentq(slope, a, b, xtol=1e-15, maxiter=200)
    return None


def maximize_log_portfolio(
    e1: np.ndarray,
    e2: np.ndarray,
    weights: np.ndarray,
    lam_range: tuple[float, float] = (0.0, 1.0),
) -> tuple[float, float]:
    """Return (argmax, max) of sum(w * log mix(lam)) over lam_range.

    Golden-section locates the optimum; a root-find on the slope then
    tightens first-order optimality to machine precision.
    """
    lo, hi = lam_range
    e1 = np.asarray(e1, dtype=float)
    e2 = np.asarray(e2, dtype=float)
    weights = np.asarray(weights, dtype=float)
    keep = weights > 0.0
    e1, e2, weights = e1[keep], e2[keep], weights[keep]

    def objective(lam: float) -> float:
        return log_portfolio_value(lam, e1, e2, weights)

    def slope(lam: float) -> float:
        return log_portfolio_slope(lam, e1, e2, weights)

    midpoint = (lo + hi) / 2.0
    if weights.size == 0:
        return midpoint, 0.0
    if np.any((e1 == 0.0) & (e2 == 0.0)):
        return midpoint, -math.inf
    if np.all(e1 == e2):
        return midpoint, objective(midpoint)

    if slope(lo) <= 0.0:
        return lo, objective(lo)
    if slope(hi) >= 0.0:
        return hi, objective(hi)

    lam, _ = golden_section_max(objective, lo, hi)
    polished = _polish(lam, lo, hi, slope)
    if polished is not None:
        lam = polished
    return lam, objective(lam)
