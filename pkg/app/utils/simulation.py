"""Monte Carlo experiment runner: growth traces, rejection times, type-I checks and regret audits."""
import logging
import math
import time
from functools import partial
from multiprocessing import Pool
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from app.core.eprocess import (
    EProcessKind,
    check_ordering,
    co96_bound,
    first_crossing,
    regret_eprocess_paths,
)
from app.core.errors import ConfigError, DegenerateDistributionError, DomainError, InvariantViolation
from app.core.ledger import HindsightTracker, hindsight_envelope
from app.core.optimize import maximize_log_portfolio
from app.core.oracle import (
    conservative_bounds,
    mean_difference,
    ons_rejection_time_bound,
    rejection_time_bound,
    solve,
)
from app.core.problems import pair_arrays, unit_arrays
from app.core.strategies import (
    EPROCESS_TRACKS,
    BettingStrategy,
    make_strategy,
    ons_lambda_range,
    up_initial_state,
    up_log_wealth_path,
)
from app.models.distribution import FiniteDistribution
from app.models.experiment import (
    AuditFamily,
    AuditReport,
    ExperimentConfig,
    ExperimentKind,
    ReplicationRecord,
    RunResult,
    RunSummary,
    TracePoint,
)
from app.models.oracle import OracleSolution
from app.models.problem import ProblemKind
from app.utils.result_writer import strategy_label, summarize_records
from app.utils.rng import AUDIT_STREAM, replication_rng
from app.utils.sampling import draw_observations, to_finite

logger = logging.getLogger(__name__)

MAX_CHUNK = 4096
FIRST_CHUNK = 16
AUDIT_SLACK = 1e-9
AUDIT_EXACT_POINTS = 16


def log_checkpoints(horizon: int) -> List[int]:
    """1, 2, 5, 10, 20, 50, ... up to the horizon, which is always included."""
    points = []
    scale = 1
    while scale <= horizon:
        for mantissa in (1, 2, 5):
            if mantissa * scale <= horizon:
                points.append(mantissa * scale)
        scale *= 10
    if points[-1] != horizon:
        points.append(horizon)
    return points


class _PathEngine:
    """One replication's shared data stream driving every requested strategy."""

    def __init__(self, config: ExperimentConfig, replication: int, oracle_lambda: Optional[float]):
        self.config = config
        self.rng = replication_rng(config.seed, replication)
        self.strategies: Dict[str, BettingStrategy] = {
            name: make_strategy(name, config.problem, oracle_lambda, config.up_nodes)
            for name in config.strategies
            if name not in EPROCESS_TRACKS
        }
        self.tracker = HindsightTracker()
        self.n = 0

    def advance(self, steps: int, names: List[str], hindsight: bool) -> Dict[str, np.ndarray]:
        """Log e-process values over the next `steps` observations for the given names."""
        x, y = draw_observations(self.config.problem, self.config.alternative, self.rng, steps)
        e1, e2 = pair_arrays(self.config.problem, x, y)
        units = unit_arrays(self.config.problem, x, y)

        paths = {name: self.strategies[name].log_wealth_path(e1, e2, units) for name in names if name in self.strategies}
        if hindsight:
            best = np.empty(steps)
            lam_max = np.empty(steps)
            for i, (a, b) in enumerate(zip(e1.tolist(), e2.tolist())):
                self.tracker.add(a, b)
                lam_max[i], best[i] = self.tracker.best()
            tracks = regret_eprocess_paths(best, lam_max, start_n=self.n + 1)
            for kind in (EProcessKind.CO96, EProcessKind.OJ23):
                paths[kind.value] = tracks[kind]
        self.n += steps
        return paths


def _growth_replication(config: ExperimentConfig, oracle_lambda: Optional[float], replication: int) -> Dict[str, Any]:
    engine = _PathEngine(config, replication, oracle_lambda)
    checkpoints = config.checkpoints or log_checkpoints(config.horizon)
    checkpoints = [c for c in checkpoints if c <= config.horizon]
    fallback = config.up_fallback_to_co96_after
    hindsight = config.uses_tracks or config.ordering_enabled or (fallback is not None and "up" in config.strategies)

    final: Dict[str, float] = {}
    traces: List[Dict[str, Any]] = []
    while engine.n < config.horizon:
        start = engine.n
        paths = engine.advance(min(MAX_CHUNK, config.horizon - start), config.strategies, hindsight)

        if config.ordering_enabled:
            bad = check_ordering(paths["co96"], paths["oj23"], paths["up"])
            if bad is not None:
                n = start + bad + 1
                raise InvariantViolation(
                    f"CO96 <= OJ23 <= UP failed in replication {replication} at n={n}: "
                    f"co96={paths['co96'][bad]!r} oj23={paths['oj23'][bad]!r} up={paths['up'][bad]!r}"
                )

        for c in checkpoints:
            if start < c <= engine.n:
                for name in config.strategies:
                    value = paths[name][c - start - 1]
                    if name == "up" and fallback is not None and c > fallback:
                        value = paths["co96"][c - start - 1]
                    traces.append(
                        {"replication": replication, "strategy": name, "n": c, "log_wealth": float(value), "growth": float(value) / c}
                    )
        for name in config.strategies:
            final[name] = float(paths[name][-1])

    records = [
        {
            "replication": replication,
            "strategy": name,
            "n_or_tau": config.horizon,
            "censored": False,
            "log_wealth": final[name],
            "growth": final[name] / config.horizon,
        }
        for name in config.strategies
    ]
    logger.debug("Growth replication %d done", replication)
    return {"records": records, "traces": traces}


def _crossing_replication(config: ExperimentConfig, oracle_lambda: Optional[float], replication: int) -> Dict[str, Any]:
    """First passage of every strategy over every level's threshold, stopping once all are decided."""
    engine = _PathEngine(config, replication, oracle_lambda)
    levels = config.levels
    thresholds = {alpha: math.log(1.0 / alpha) for alpha in levels}

    crossed: Dict[tuple, tuple] = {}
    last: Dict[str, float] = {name: 0.0 for name in config.strategies}
    active = list(config.strategies)
    chunk = FIRST_CHUNK
    while active and engine.n < config.horizon:
        start = engine.n
        steps = min(chunk, config.horizon - start)
        hindsight = any(name in EPROCESS_TRACKS for name in active)
        paths = engine.advance(steps, active, hindsight)

        for name in list(active):
            path = paths[name]
            for alpha, threshold in thresholds.items():
                if (name, alpha) in crossed:
                    continue
                hit = first_crossing(path, threshold)
                if hit is not None:
                    crossed[(name, alpha)] = (start + hit, float(path[hit - 1]))
            last[name] = float(path[-1])
            if all((name, alpha) in crossed for alpha in levels):
                active.remove(name)
        chunk = min(2 * chunk, MAX_CHUNK)

    records = []
    for alpha in levels:
        for name in config.strategies:
            if (name, alpha) in crossed:
                tau, value = crossed[(name, alpha)]
                censored = False
            else:
                tau, value, censored = config.horizon, last[name], True
            records.append(
                {
                    "replication": replication,
                    "strategy": strategy_label(name, alpha, config.alpha),
                    "n_or_tau": tau,
                    "censored": censored,
                    "log_wealth": value,
                    "growth": value / tau,
                }
            )
    logger.debug("Crossing replication %d done after %d observations", replication, engine.n)
    return {"records": records, "traces": []}


def _audit_sequences(config: ExperimentConfig) -> List[tuple[str, int]]:
    families = [("random", i) for i in range(config.audit.sequences)]
    if config.audit.adversarial:
        families += [("alternating", 0), ("constant", 0)]
    return families


def audit_pairs(config: ExperimentConfig, family: str, index: int) -> tuple[np.ndarray, np.ndarray]:
    """Pair sequence for one audited path.

    Random pairs draw each e-value log-uniformly from [e_min, e_max] or as an
    exact zero; a step where both came out zero is redrawn on the second asset.
    """
    audit = config.audit
    n = audit.length
    if family == "alternating":
        odd = np.arange(n) % 2 == 1
        return np.where(odd, 2.0, 0.0), np.where(odd, 0.0, 2.0)
    if family == "constant":
        return np.ones(n), np.ones(n)

    rng = replication_rng(config.seed, index, AUDIT_STREAM)
    lo, hi = math.log(audit.e_min), math.log(audit.e_max)
    values = np.exp(rng.uniform(lo, hi, size=(n, 2)))
    values[rng.random((n, 2)) < audit.zero_prob] = 0.0
    both_zero = (values[:, 0] == 0.0) & (values[:, 1] == 0.0)
    values[both_zero, 1] = np.exp(rng.uniform(lo, hi, size=int(both_zero.sum())))
    return values[:, 0], values[:, 1]


def _audit_replication(config: ExperimentConfig, task: tuple[str, int]) -> Dict[str, Any]:
    family, index = task
    e1, e2 = audit_pairs(config, family, index)
    up_path, _ = up_log_wealth_path(up_initial_state(config.up_nodes), e1, e2)

    # certified slack from the hindsight envelope; prefixes it leaves negative, the
    # final one and the tightest few are re-solved exactly
    n = np.arange(1, e1.size + 1, dtype=float)
    _, best_upper = hindsight_envelope(e1, e2)
    bound = co96_bound(n)
    slack = bound - (best_upper - up_path)
    exact = set(np.flatnonzero(slack < 0.0).tolist())
    exact.update(np.argsort(slack, kind="stable")[:AUDIT_EXACT_POINTS].tolist())
    exact.add(e1.size - 1)
    regret = best_upper - up_path
    for i in sorted(exact):
        _, best = maximize_log_portfolio(e1[: i + 1], e2[: i + 1], np.ones(i + 1))
        regret[i] = best - up_path[i]
        slack[i] = bound[i] - regret[i]
    bad = np.flatnonzero(slack < -AUDIT_SLACK)
    return {
        "family": family,
        "index": index,
        "violations": int(bad.size),
        "first_violation": int(bad[0]) + 1 if bad.size else None,
        "min_slack": float(slack.min()),
        "final_regret": float(regret[-1]),
        "record": {
            "replication": index,
            "strategy": f"up:{family}",
            "n_or_tau": int(e1.size),
            "censored": False,
            "log_wealth": float(up_path[-1]),
            "growth": float(up_path[-1]) / e1.size,
        },
    }


class ExperimentRunner:
    """Runs one configured experiment and assembles its records and summary."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.finite: Optional[FiniteDistribution] = None
        self.oracle: Optional[OracleSolution] = None
        self.ons_oracle: Optional[OracleSolution] = None

    def _prepare_scenario(self) -> None:
        config = self.config
        if config.problem is None or config.alternative is None:
            raise ConfigError("This experiment needs both 'problem' and 'alternative'")
        if config.horizon < 1:
            raise ConfigError("horizon must be positive")
        if config.ordering_enabled and not {"up", *EPROCESS_TRACKS} <= set(config.strategies):
            raise ConfigError("check_ordering needs 'up', 'co96' and 'oj23' among the strategies")

        self.finite = to_finite(config.alternative, config.problem)
        try:
            self.oracle = solve(self.finite)
            self.ons_oracle = solve(self.finite, lam_range=ons_lambda_range(config.problem))
        except DegenerateDistributionError as e:
            logger.warning("No oracle for %s: %s", config.alternative.label, e)
            if "oracle" in config.strategies:
                raise ConfigError(f"Strategy 'oracle' needs a non-degenerate alternative: {e}") from e

    def _map(self, fn: Callable, tasks: List[Any]) -> List[Any]:
        """Run tasks in order, in a process pool when more than one worker is configured."""
        if self.config.workers > 1 and len(tasks) > 1:
            with Pool(processes=self.config.workers) as pool:
                return pool.map(fn, tasks)
        return [fn(task) for task in tasks]

    def _oracle_lambda(self) -> Optional[float]:
        return self.oracle.lambda_star.lam if self.oracle is not None else None

    def _scenario(self) -> Dict[str, Any]:
        config = self.config
        scenario: Dict[str, Any] = {
            "name": config.name,
            "horizon": config.horizon,
            "replications": config.replications,
            "strategies": list(config.strategies),
            "alpha": config.alpha,
            "levels": config.levels,
        }
        if config.problem is not None:
            scenario["problem"] = config.problem.label
        if config.alternative is not None:
            scenario["alternative"] = config.alternative.label
        return scenario

    def oracle_report(self) -> Optional[Dict[str, Any]]:
        if self.oracle is None:
            return None
        config = self.config
        report: Dict[str, Any] = {
            "lambda_star": self.oracle.lambda_star.lam,
            "gamma_star": self.oracle.gamma_star,
            "ell_star": self.oracle.ell_star,
            "ons_lambda_range": list(ons_lambda_range(config.problem)),
            "ons_ell_star": self.ons_oracle.ell_star if self.ons_oracle else None,
            "rejection_benchmarks": {},
        }
        for alpha in config.levels:
            try:
                report["rejection_benchmarks"][str(alpha)] = rejection_time_bound(alpha, self.oracle.ell_star)
            except DomainError:
                report["rejection_benchmarks"][str(alpha)] = None

        try:
            delta, variance = mean_difference(self.finite)
            bounds = conservative_bounds(delta)
            report["delta"] = delta
            report["variance"] = variance
            report["conservative_growth"] = bounds.growth_lower
            report["conservative_rejection"] = bounds.rejection_upper
            if config.problem.kind == ProblemKind.DIFF_MEANS:
                report["ons_rejection_bound"] = ons_rejection_time_bound(config.alpha, delta)
        except DomainError as e:
            logger.debug("Skipping moment-based bounds: %s", e)
        return report

    def _result(self, kind: ExperimentKind, outputs: List[Dict[str, Any]], audit: Optional[AuditReport] = None) -> RunResult:
        records = [ReplicationRecord(**record) for out in outputs for record in out["records"]]
        traces = [TracePoint(**point) for out in outputs for point in out.get("traces", [])]
        aggregates = summarize_records(
            [r.model_dump() for r in records], kind, self.config.alpha
        ) if kind != ExperimentKind.REGRET_AUDIT else []
        summary = RunSummary(
            kind=kind,
            scenario=self._scenario(),
            oracle=self.oracle_report(),
            aggregates=aggregates,
            config=self.config.model_dump(mode="json"),
            seed=self.config.seed,
            audit=audit,
        )
        return RunResult(records=records, traces=traces, summary=summary)

    def run_growth(self) -> RunResult:
        self._prepare_scenario()
        started = time.perf_counter()
        logger.info(
            "Growth run: %s under %s, %d replications of n=%d (ell*=%s)",
            self.config.problem.label,
            self.config.alternative.label,
            self.config.replications,
            self.config.horizon,
            f"{self.oracle.ell_star:.6g}" if self.oracle else "n/a",
        )
        fn = partial(_growth_replication, self.config, self._oracle_lambda())
        outputs = self._map(fn, list(range(self.config.replications)))
        logger.info("Growth run finished in %.1fs", time.perf_counter() - started)
        return self._result(ExperimentKind.GROWTH, outputs)

    def run_rejection_times(self) -> RunResult:
        self._prepare_scenario()
        if self.oracle is None or self.oracle.ell_star <= 0.0:
            logger.warning("Optimal growth is not positive for %s: the test may never reject", self.config.alternative.label)
        started = time.perf_counter()
        logger.info(
            "Rejection-time run: %s under %s at alpha=%s, %d replications, horizon %d",
            self.config.problem.label,
            self.config.alternative.label,
            ", ".join(f"{a:g}" for a in self.config.levels),
            self.config.replications,
            self.config.horizon,
        )
        fn = partial(_crossing_replication, self.config, self._oracle_lambda())
        outputs = self._map(fn, list(range(self.config.replications)))
        result = self._result(ExperimentKind.REJECT_TIMES, outputs)
        self._warn_censored(result)
        logger.info("Rejection-time run finished in %.1fs", time.perf_counter() - started)
        return result

    def run_type1(self) -> RunResult:
        self._prepare_scenario()
        delta, _ = mean_difference(self.finite)
        if abs(delta) > 1e-9:
            logger.warning(
                "Type-I run with a source whose mean is %.6g away from the null; crossing fractions are not null rates",
                delta,
            )
        started = time.perf_counter()
        logger.info(
            "Type-I run: %s under %s at alpha=%s, %d replications, horizon %d",
            self.config.problem.label,
            self.config.alternative.label,
            ", ".join(f"{a:g}" for a in self.config.levels),
            self.config.replications,
            self.config.horizon,
        )
        fn = partial(_crossing_replication, self.config, self._oracle_lambda())
        outputs = self._map(fn, list(range(self.config.replications)))
        logger.info("Type-I run finished in %.1fs", time.perf_counter() - started)
        return self._result(ExperimentKind.TYPE1, outputs)

    def run_regret_audit(self) -> RunResult:
        started = time.perf_counter()
        tasks = _audit_sequences(self.config)
        logger.info("Regret audit: %d sequences of length %d", len(tasks), self.config.audit.length)
        outcomes = self._map(partial(_audit_replication, self.config), tasks)

        families = []
        for family in dict.fromkeys(o["family"] for o in outcomes):
            group = [o for o in outcomes if o["family"] == family]
            families.append(
                AuditFamily(
                    family=family,
                    sequences=len(group),
                    violations=sum(o["violations"] for o in group),
                    min_slack=min(o["min_slack"] for o in group),
                    mean_final_regret=float(np.mean([o["final_regret"] for o in group])),
                )
            )
        report = AuditReport(
            violations=sum(f.violations for f in families),
            min_slack=min(f.min_slack for f in families),
            families=families,
        )
        result = self._result(
            ExperimentKind.REGRET_AUDIT, [{"records": [o["record"]]} for o in outcomes], audit=report
        )
        logger.info(
            "Regret audit finished in %.1fs: %d violations, min slack %.3g",
            time.perf_counter() - started,
            report.violations,
            report.min_slack,
        )
        return result

    def _warn_censored(self, result: RunResult) -> None:
        for aggregate in result.summary.aggregates:
            if aggregate.censored_fraction:
                logger.warning(
                    "%s: %.1f%% of paths censored at n=%d; mean tau is a lower bound",
                    aggregate.strategy,
                    100.0 * aggregate.censored_fraction,
                    self.config.horizon,
                )

    def run(self, kind: ExperimentKind) -> RunResult:
        kind = ExperimentKind(kind)
        if kind == ExperimentKind.GROWTH:
            return self.run_growth()
        if kind == ExperimentKind.REJECT_TIMES:
            return self.run_rejection_times()
        if kind == ExperimentKind.TYPE1:
            return self.run_type1()
        if kind == ExperimentKind.REGRET_AUDIT:
            return self.run_regret_audit()
        raise ConfigError(f"'{kind.value}' is not a simulation experiment")


def run_growth(config: ExperimentConfig) -> RunResult:
    return ExperimentRunner(config).run_growth()


def run_rejection_times(config: ExperimentConfig) -> RunResult:
    return ExperimentRunner(config).run_rejection_times()


def run_type1(config: ExperimentConfig) -> RunResult:
    return ExperimentRunner(config).run_type1()


def run_regret_audit(config: ExperimentConfig) -> RunResult:
    """Audit UP regret against co96_bound; violations are counted in summary.audit."""
    return ExperimentRunner(config).run_regret_audit()


def solve_scenario(config: ExperimentConfig) -> ExperimentRunner:
    """Runner with the scenario's oracle solved, for the oracle subcommand and the HTTP surface."""
    runner = ExperimentRunner(config)
    runner._prepare_scenario()
    return runner
