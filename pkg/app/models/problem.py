from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core.errors import ConfigError


class ProblemKind(str, Enum):
    BOUNDED_TWO_SIDED = "bounded_two_sided"
    BOUNDED_ONE_SIDED = "bounded_one_sided"
    DIFF_MEANS = "diff_means"


_PREFIXES = {
    "bounded2": ProblemKind.BOUNDED_TWO_SIDED,
    "bounded1": ProblemKind.BOUNDED_ONE_SIDED,
}


class ProblemSpec(BaseModel):
    """A concrete testing problem: how raw observations become e-value pairs."""

    model_config = ConfigDict(
        frozen=True,
        json_schema_extra={"example": {"kind": "bounded_two_sided", "mu0": 0.3}},
    )

    kind: ProblemKind = Field(..., description="Which pair mapping to apply")
    mu0: float = Field(0.5, gt=0.0, lt=1.0, description="Null mean (fixed to 1/2 for diff_means)")

    @model_validator(mode="after")
    def _diff_means_centre(self) -> "ProblemSpec":
        if self.kind == ProblemKind.DIFF_MEANS and self.mu0 != 0.5:
            raise ValueError("diff_means problems are tested at mu0 = 1/2")
        return self

    @classmethod
    def parse(cls, text: str) -> "ProblemSpec":
        """Parse 'bounded2:<mu0>', 'bounded1:<mu0>' or 'diffmeans'."""
        cleaned = text.strip().lower()
        if cleaned == "diffmeans":
            return cls(kind=ProblemKind.DIFF_MEANS)

        prefix, sep, value = cleaned.partition(":")
        if not sep or prefix not in _PREFIXES:
            raise ConfigError(
                f"Unknown problem '{text}': expected 'bounded2:<mu0>', 'bounded1:<mu0>' or 'diffmeans'"
            )
        try:
            mu0 = float(value)
        except ValueError as e:
            raise ConfigError(f"Invalid null mean in problem '{text}': {e}") from e
        if not 0.0 < mu0 < 1.0:
            raise ConfigError(f"Null mean in problem '{text}' must lie in (0, 1)")
        return cls(kind=_PREFIXES[prefix], mu0=mu0)

    @property
    def label(self) -> str:
        if self.kind == ProblemKind.DIFF_MEANS:
            return "diffmeans"
        prefix = "bounded2" if self.kind == ProblemKind.BOUNDED_TWO_SIDED else "bounded1"
        return f"{prefix}:{self.mu0:g}"

    @property
    def is_paired(self) -> bool:
        """True when each observation is an (x, y) pair."""
        return self.kind == ProblemKind.DIFF_MEANS
