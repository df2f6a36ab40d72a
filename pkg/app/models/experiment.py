from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.core.strategies import DEFAULT_UP_NODES, EPROCESS_TRACKS, validate_strategy_name
from app.models.distribution import SourceDistribution
from app.models.problem import ProblemSpec

SCHEMA_VERSION = "1.0"
RECORD_COLUMNS = ["replication", "strategy", "n_or_tau", "censored", "log_wealth", "growth"]
TRACE_COLUMNS = ["replication", "strategy", "n", "log_wealth", "growth"]


class ExperimentKind(str, Enum):
    ORACLE = "oracle"
    GROWTH = "growth"
    REJECT_TIMES = "reject-times"
    TYPE1 = "type1"
    REGRET_AUDIT = "regret-audit"


class OutputFormat(str, Enum):
    CSV = "csv"
    JSON = "json"
    BOTH = "both"


class OutputOptions(BaseModel):
    model_config = ConfigDict(extra="forbid")

    out_dir: Optional[str] = Field(None, description="Directory for emitted files; nothing is written when unset")
    format: OutputFormat = Field(OutputFormat.BOTH, description="Which files to write")
    traces: bool = Field(True, description="Write the growth trace CSV for growth runs")


class AuditOptions(BaseModel):
    """Pair-sequence generator settings for regret audits."""

    model_config = ConfigDict(extra="forbid")

    sequences: int = Field(100, ge=1, description="Random sequences to audit")
    length: int = Field(5000, ge=1, description="Pairs per sequence")
    e_min: float = Field(1e-6, gt=0.0, description="Smallest non-zero e-value drawn")
    e_max: float = Field(1e8, gt=0.0, description="Largest e-value drawn")
    zero_prob: float = Field(0.05, ge=0.0, lt=0.5, description="Chance each e-value is exactly zero")
    adversarial: bool = Field(True, description="Also audit the alternating and constant sequences")

    @model_validator(mode="after")
    def _range(self) -> "AuditOptions":
        if self.e_min >= self.e_max:
            raise ValueError("e_min must be below e_max")
        return self


class ExperimentConfig(BaseModel):
    """Declarative Monte Carlo experiment."""

    model_config = ConfigDict(
        extra="forbid",
        json_schema_extra={
            "example": {
                "name": "growth_mu03",
                "problem": "bounded2:0.3",
                "alternative": {"kind": "bernoulli", "p": 0.4},
                "strategies": ["up", "co96", "oj23", "ons", "oracle"],
                "alpha": 0.01,
                "horizon": 20000,
                "replications": 64,
                "seed": 2024,
                "outputs": {"out_dir": "results/growth_mu03", "format": "both"},
            }
        },
    )

    name: Optional[str] = Field(None, description="Scenario label echoed in summaries")
    problem: Optional[ProblemSpec] = Field(None, description="Testing problem, e.g. 'bounded2:0.3'")
    alternative: Optional[SourceDistribution] = Field(None, description="Data-generating distribution")
    strategies: List[str] = Field(default_factory=lambda: ["up"], min_length=1, description="Strategy names")
    alpha: float = Field(0.01, gt=0.0, lt=1.0, description="Test level")
    alphas: Optional[List[float]] = Field(None, description="Additional levels evaluated on the same paths")
    horizon: int = Field(20000, ge=1, description="Maximum observations per path")
    replications: int = Field(64, ge=1, description="Independent paths per strategy")
    seed: int = Field(0, ge=0, lt=2**64, description="Root seed of all random streams")
    workers: int = Field(1, ge=1, description="Processes used for replications")
    up_nodes: int = Field(DEFAULT_UP_NODES, ge=2, description="Quadrature nodes of the universal portfolio")
    checkpoints: Optional[List[int]] = Field(None, description="Growth trace sample points; log-spaced when unset")
    check_ordering: Optional[bool] = Field(
        None, description="Check CO96 <= OJ23 <= UP at every step; on when all three are requested"
    )
    up_fallback_to_co96_after: Optional[int] = Field(
        None, ge=1, description="Report CO96 in place of UP in growth traces beyond this n"
    )
    audit: AuditOptions = Field(default_factory=AuditOptions)
    outputs: OutputOptions = Field(default_factory=OutputOptions)

    @field_validator("problem", mode="before")
    @classmethod
    def _parse_problem(cls, value):
        if isinstance(value, str):
            return ProblemSpec.parse(value)
        return value

    @field_validator("strategies")
    @classmethod
    def _known_strategies(cls, names: List[str]) -> List[str]:
        cleaned = [validate_strategy_name(name) for name in names]
        if len(set(cleaned)) != len(cleaned):
            raise ValueError(f"duplicate strategy names in {names}")
        return cleaned

    @field_validator("alphas")
    @classmethod
    def _levels(cls, alphas: Optional[List[float]]) -> Optional[List[float]]:
        if alphas is not None and any(not 0.0 < a < 1.0 for a in alphas):
            raise ValueError("every alpha must lie in (0, 1)")
        return alphas

    @field_validator("checkpoints")
    @classmethod
    def _positive_checkpoints(cls, checkpoints: Optional[List[int]]) -> Optional[List[int]]:
        if checkpoints is not None and any(c < 1 for c in checkpoints):
            raise ValueError("checkpoints must be positive")
        return sorted(set(checkpoints)) if checkpoints is not None else None

    @property
    def levels(self) -> List[float]:
        """alpha followed by any extra levels, without duplicates."""
        levels = [self.alpha]
        for a in self.alphas or []:
            if a not in levels:
                levels.append(a)
        return levels

    @property
    def uses_tracks(self) -> bool:
        return any(name in EPROCESS_TRACKS for name in self.strategies)

    @property
    def ordering_enabled(self) -> bool:
        if self.check_ordering is not None:
            return self.check_ordering
        return {"up", *EPROCESS_TRACKS} <= set(self.strategies)


class ReplicationRecord(BaseModel):
    replication: int = Field(..., description="Replication index")
    strategy: str = Field(..., description="Strategy or e-process name")
    n_or_tau: int = Field(..., description="Rejection time, or the horizon reached")
    censored: bool = Field(..., description="True when the path did not reject within the horizon")
    log_wealth: float = Field(..., description="Log e-process value at n_or_tau (growth/type1: at the horizon)")
    growth: float = Field(..., description="log_wealth divided by the observations it covers")


class TracePoint(BaseModel):
    replication: int
    strategy: str
    n: int
    log_wealth: float
    growth: float


class StrategySummary(BaseModel):
    strategy: str
    alpha: Optional[float] = None
    replications: int
    mean_log_wealth: Optional[float] = None
    mean_growth: Optional[float] = None
    se_growth: Optional[float] = None
    mean_tau: Optional[float] = None
    se_tau: Optional[float] = None
    median_tau: Optional[float] = None
    q10_tau: Optional[float] = None
    q90_tau: Optional[float] = None
    censored_fraction: Optional[float] = None
    mean_tau_is_lower_bound: Optional[bool] = None
    tau_over_log_inv_alpha: Optional[float] = None
    crossing_fraction: Optional[float] = None
    crossing_se: Optional[float] = None


class AuditFamily(BaseModel):
    family: str
    sequences: int
    violations: int
    min_slack: float = Field(
        ..., description="Smallest co96_bound(n) - regret seen on any path; a certified lower bound where not solved exactly"
    )
    mean_final_regret: float


class AuditReport(BaseModel):
    violations: int
    min_slack: float
    families: List[AuditFamily]


class RunSummary(BaseModel):
    schema_version: str = SCHEMA_VERSION
    kind: ExperimentKind
    scenario: Dict[str, Any]
    oracle: Optional[Dict[str, Any]] = None
    aggregates: List[StrategySummary] = Field(default_factory=list)
    config: Dict[str, Any]
    seed: int
    audit: Optional[AuditReport] = None


class RunResult(BaseModel):
    records: List[ReplicationRecord] = Field(default_factory=list)
    traces: List[TracePoint] = Field(default_factory=list)
    summary: RunSummary
