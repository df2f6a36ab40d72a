import math

from pydantic import BaseModel, ConfigDict, Field, field_validator


class EValuePair(BaseModel):
    """One observation mapped to the two assets the gambler splits wealth between."""

    model_config = ConfigDict(
        frozen=True,
        json_schema_extra={"example": {"e1": 1.6, "e2": 0.4}},
    )

    e1: float = Field(..., ge=0.0, description="Value of the first e-value (asset 1)")
    e2: float = Field(..., ge=0.0, description="Value of the second e-value (asset 2)")

    @field_validator("e1", "e2")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("e-values must be finite")
        return value

    @property
    def spread(self) -> float:
        return self.e2 - self.e1

    def as_tuple(self) -> tuple[float, float]:
        return self.e1, self.e2


class Bet(BaseModel):
    """Fraction of wealth placed on the second asset."""

    model_config = ConfigDict(
        frozen=True,
        populate_by_name=True,
        json_schema_extra={"example": {"lambda": 0.4}},
    )

    lam: float = Field(..., ge=0.0, le=1.0, alias="lambda", description="Bet in [0, 1]")
