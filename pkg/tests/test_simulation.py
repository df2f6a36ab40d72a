import math

import numpy as np
import pytest

from app.core.errors import ConfigError, InvariantViolation
from app.core.eprocess import co96_bound
from app.core.ledger import HindsightTracker
from app.core.oracle import ons_rejection_time_bound
from app.core.strategies import up_initial_state, up_log_wealth_path
from app.models.experiment import ExperimentKind
from app.utils import simulation
from app.utils.simulation import (
    ExperimentRunner,
    audit_pairs,
    log_checkpoints,
    run_growth,
    run_regret_audit,
    run_rejection_times,
    run_type1,
    solve_scenario,
)


def test_log_checkpoints():
    assert log_checkpoints(20000)[:7] == [1, 2, 5, 10, 20, 50, 100]
    assert log_checkpoints(20000)[-2:] == [10000, 20000]
    assert log_checkpoints(7) == [1, 2, 5, 7]
    assert log_checkpoints(1) == [1]


class TestGrowth:
    def test_growth_near_optimum(self, make_config):
        config = make_config(
            strategies=["up", "co96", "oj23", "ons", "oracle"],
            horizon=2000,
            replications=8,
        )
        result = run_growth(config)
        assert len(result.records) == 8 * 5
        assert {r.n_or_tau for r in result.records} == {2000}
        means = {s.strategy: s.mean_growth for s in result.summary.aggregates}
        assert means["oracle"] == pytest.approx(0.0226, abs=0.01)
        assert means["up"] == pytest.approx(0.0226, abs=0.012)
        assert means["co96"] <= means["oj23"] <= means["up"] + 1e-9
        assert result.summary.oracle["lambda_star"] == pytest.approx(0.4, abs=1e-8)

    def test_traces_at_checkpoints(self, make_config):
        result = run_growth(make_config(strategies=["up", "ons"], horizon=100, replications=2))
        ns = sorted({t.n for t in result.traces})
        assert ns == [1, 2, 5, 10, 20, 50, 100]
        assert len(result.traces) == 2 * 2 * 7
        final = [t for t in result.traces if t.n == 100 and t.strategy == "up" and t.replication == 0][0]
        record = [r for r in result.records if r.strategy == "up" and r.replication == 0][0]
        assert final.log_wealth == pytest.approx(record.log_wealth)

    def test_deterministic_for_a_seed(self, make_config):
        config = make_config(strategies=["up", "ftl", "const:0.35"], horizon=300, replications=3)
        first = [r.model_dump() for r in run_growth(config).records]
        second = [r.model_dump() for r in run_growth(config).records]
        assert first == second
        other = [r.model_dump() for r in run_growth(config.model_copy(update={"seed": 124})).records]
        assert first != other

    def test_common_random_numbers_across_strategy_sets(self, make_config):
        alone = run_growth(make_config(strategies=["ons"], horizon=150))
        together = run_growth(make_config(strategies=["up", "ons"], horizon=150))
        ons_alone = [r.log_wealth for r in alone.records]
        ons_together = [r.log_wealth for r in together.records if r.strategy == "ons"]
        assert ons_alone == ons_together

    def test_process_pool_matches_serial(self, make_config):
        config = make_config(strategies=["up", "ons"], horizon=200, replications=4)
        serial = [r.model_dump() for r in run_growth(config).records]
        pooled = [r.model_dump() for r in run_growth(config.model_copy(update={"workers": 2})).records]
        assert serial == pooled

    def test_up_fallback_reports_co96(self, make_config):
        config = make_config(strategies=["up", "co96"], horizon=100, replications=1, up_fallback_to_co96_after=10)
        traces = {(t.strategy, t.n): t.log_wealth for t in run_growth(config).traces}
        assert traces[("up", 5)] != traces[("co96", 5)]
        for n in (20, 50, 100):
            assert traces[("up", n)] == traces[("co96", n)]

    def test_ordering_violation_is_fatal(self, make_config, monkeypatch):
        monkeypatch.setattr(simulation, "check_ordering", lambda *args, **kwargs: 0)
        with pytest.raises(InvariantViolation):
            run_growth(make_config(strategies=["up", "co96", "oj23"], horizon=50, replications=1))

    def test_ordering_needs_all_three(self, make_config):
        with pytest.raises(ConfigError):
            run_growth(make_config(strategies=["up"], check_ordering=True))

    def test_needs_a_scenario(self, make_config):
        with pytest.raises(ConfigError):
            run_growth(make_config(alternative=None))

    def test_diff_means_growth(self, make_config):
        config = make_config(
            problem="diffmeans",
            alternative={"kind": "bernoulli", "p": 0.8, "y_source": {"kind": "bernoulli", "p": 0.2}},
            strategies=["up", "ons", "ftl"],
            horizon=300,
            replications=2,
        )
        result = run_growth(config)
        assert all(r.log_wealth > 0.0 for r in result.records if r.strategy == "up")
        assert "ons_rejection_bound" in result.summary.oracle


class TestRejectionTimes:
    def test_far_alternative_rejects_quickly(self, make_config):
        config = make_config(
            problem="bounded2:0.1",
            alternative={"kind": "bernoulli", "p": 0.95},
            strategies=["oracle", "up"],
            alphas=[0.1],
            horizon=500,
            replications=30,
        )
        result = run_rejection_times(config)
        assert len(result.records) == 30 * 2 * 2
        assert not any(r.censored for r in result.records)
        by_label = {s.strategy: s for s in result.summary.aggregates}
        assert set(by_label) == {"oracle", "up", "oracle|alpha=0.1", "up|alpha=0.1"}
        # Wald: E[tau] >= log(1/alpha)/ell*, and the oracle never needs fewer than three steps here
        assert by_label["oracle"].mean_tau >= 3.0
        assert by_label["oracle"].mean_tau >= math.log(100.0) / result.summary.oracle["ell_star"]
        assert by_label["oracle|alpha=0.1"].mean_tau <= by_label["oracle"].mean_tau
        for record in result.records:
            alpha = 0.1 if "|" in record.strategy else 0.01
            assert record.log_wealth >= math.log(1.0 / alpha)

    def test_censored_paths_are_recorded_at_horizon(self, make_config):
        config = make_config(
            problem="bounded2:0.5",
            alternative={"kind": "bernoulli", "p": 0.5},
            strategies=["const:0.5"],
            horizon=40,
            replications=3,
        )
        result = run_rejection_times(config)
        assert all(r.censored and r.n_or_tau == 40 for r in result.records)
        assert result.summary.aggregates[0].mean_tau_is_lower_bound

    def test_regret_tracks_can_reject(self, make_config):
        config = make_config(
            problem="bounded2:0.1",
            alternative={"kind": "bernoulli", "p": 0.95},
            strategies=["up", "co96", "oj23"],
            horizon=400,
            replications=5,
        )
        records = run_rejection_times(config).records
        assert not any(r.censored for r in records)
        taus = {}
        for record in records:
            taus.setdefault(record.strategy, []).append(record.n_or_tau)
        for up_tau, oj23_tau, co96_tau in zip(taus["up"], taus["oj23"], taus["co96"]):
            assert up_tau <= oj23_tau <= co96_tau


class TestType1:
    def test_constant_null_bet_never_rejects(self, make_config):
        config = make_config(
            problem="bounded2:0.5",
            alternative={"kind": "bernoulli", "p": 0.5},
            strategies=["const:0.5", "up"],
            alpha=0.05,
            horizon=300,
            replications=100,
        )
        result = run_type1(config)
        by_label = {s.strategy: s for s in result.summary.aggregates}
        assert by_label["const:0.5"].crossing_fraction == 0.0
        se = math.sqrt(0.05 * 0.95 / 100)
        assert by_label["up"].crossing_fraction <= 0.05 + 3.0 * se


class TestRegretAudit:
    def test_no_violations(self, make_config):
        config = make_config(audit={"sequences": 3, "length": 200}, problem=None, alternative=None)
        result = run_regret_audit(config)
        audit = result.summary.audit
        assert audit.violations == 0
        assert audit.min_slack >= 0.0
        families = {f.family: f for f in audit.families}
        assert set(families) == {"random", "alternating", "constant"}
        assert families["random"].sequences == 3
        assert families["constant"].mean_final_regret == pytest.approx(0.0, abs=1e-12)
        assert 0.0 < families["alternating"].mean_final_regret <= co96_bound(200)
        assert len(result.records) == 5
        assert result.summary.aggregates == []

    def test_violations_are_counted(self, make_config, monkeypatch):
        monkeypatch.setattr(simulation, "co96_bound", lambda n: np.full_like(n, -1.0))
        config = make_config(audit={"sequences": 1, "length": 20, "adversarial": False})
        audit = run_regret_audit(config).summary.audit
        assert audit.violations == 20
        assert audit.min_slack < 0.0

    def test_min_slack_is_a_certified_lower_bound(self, make_config):
        audit_options = {"sequences": 1, "length": 300, "adversarial": False, "e_min": 0.5, "e_max": 2.0, "zero_prob": 0.0}
        config = make_config(audit=audit_options, problem=None, alternative=None)
        audit = run_regret_audit(config).summary.audit

        e1, e2 = audit_pairs(config, "random", 0)
        up_path, _ = up_log_wealth_path(up_initial_state(config.up_nodes), e1, e2)
        tracker = HindsightTracker()
        slack = []
        for i, (a, b) in enumerate(zip(e1.tolist(), e2.tolist())):
            tracker.add(a, b)
            slack.append(co96_bound(i + 1) - (tracker.best()[1] - up_path[i]))
        assert audit.min_slack <= min(slack) + 1e-9
        assert audit.min_slack >= min(slack) - 0.05
        assert audit.families[0].mean_final_regret == pytest.approx(co96_bound(300) - slack[-1], abs=1e-7)

    def test_pair_families(self, make_config):
        config = make_config(audit={"sequences": 2, "length": 500, "zero_prob": 0.3})
        e1, e2 = audit_pairs(config, "random", 0)
        assert e1.size == 500
        assert not np.any((e1 == 0.0) & (e2 == 0.0))
        assert np.any(e1 == 0.0)
        assert np.all(e1 <= 1e8 * (1.0 + 1e-12)) and np.all(e2 <= 1e8 * (1.0 + 1e-12))
        np.testing.assert_array_equal(audit_pairs(config, "random", 0)[0], e1)

        e1, e2 = audit_pairs(config, "alternating", 0)
        assert (e1[0], e2[0], e1[1], e2[1]) == (0.0, 2.0, 2.0, 0.0)
        e1, e2 = audit_pairs(config, "constant", 0)
        assert np.all(e1 == 1.0) and np.all(e2 == 1.0)


class TestScenario:
    def test_oracle_report(self, make_config):
        report = solve_scenario(make_config(alphas=[0.001])).oracle_report()
        assert report["lambda_star"] == pytest.approx(0.4, abs=1e-8)
        assert report["gamma_star"] == pytest.approx(0.47619, abs=1e-5)
        assert report["ell_star"] == pytest.approx(0.022583, abs=1e-6)
        assert report["rejection_benchmarks"]["0.01"] == pytest.approx(math.log(100.0) / report["ell_star"])
        assert set(report["rejection_benchmarks"]) == {"0.01", "0.001"}
        assert report["delta"] == pytest.approx(0.1)
        assert report["conservative_growth"] == pytest.approx(0.01 / 1.04)
        assert report["ons_lambda_range"] == pytest.approx([0.195, 0.405])
        assert "ons_rejection_bound" not in report

    def test_diff_means_report_uses_the_difference_scale(self, make_config):
        config = make_config(
            problem="diffmeans",
            alternative={"kind": "bernoulli", "p": 0.8, "y_source": {"kind": "bernoulli", "p": 0.2}},
        )
        report = solve_scenario(config).oracle_report()
        # d = x - y is 1, 0, -1 with probabilities 0.64, 0.32, 0.04
        assert report["lambda_star"] == pytest.approx(0.64 / 0.68, abs=1e-8)
        assert report["ell_star"] == pytest.approx(0.64 * math.log(1.28 / 0.68) + 0.04 * math.log(0.08 / 0.68), abs=1e-10)
        assert report["delta"] == pytest.approx(0.6)
        assert report["variance"] == pytest.approx(0.32)
        assert report["conservative_rejection"] == pytest.approx(4.0 + 1.0 / 0.36)
        assert report["conservative_growth"] == pytest.approx(0.36 / 2.44)
        assert report["conservative_growth"] <= report["ell_star"]
        assert report["ons_lambda_range"] == pytest.approx([0.25, 0.75])
        assert report["ons_ell_star"] == pytest.approx(0.64 * math.log(1.5) + 0.04 * math.log(0.5), abs=1e-10)
        assert report["ons_rejection_bound"] == pytest.approx(ons_rejection_time_bound(0.01, 0.6))

    def test_oracle_is_not_a_simulation(self, make_config):
        with pytest.raises(ConfigError):
            ExperimentRunner(make_config()).run(ExperimentKind.ORACLE)
