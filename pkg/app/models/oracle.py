from typing import Optional

from pydantic import BaseModel, ConfigDict, Field

from app.models.evalue import Bet


class OracleSolution(BaseModel):
    """Log-optimal constant bet for a known alternative."""

    model_config = ConfigDict(
        frozen=True,
        json_schema_extra={
            "example": {
                "lambda_star": {"lambda": 0.4},
                "gamma_star": 0.47619,
                "ell_star": 0.022583,
            }
        },
    )

    lambda_star: Bet = Field(..., description="Maximiser of the expected log-increment")
    gamma_star: Optional[float] = Field(None, description="lambda_star in the problem's gamma scale")
    ell_star: float = Field(..., description="Optimal expected log-growth in nats per observation")


class ConservativeBounds(BaseModel):
    model_config = ConfigDict(frozen=True)

    growth_lower: float = Field(..., description="Lower bound on the optimal log-growth")
    rejection_upper: float = Field(..., description="Upper bound on E[tau]/log(1/alpha) as alpha -> 0")
    delta: float = Field(..., description="Mean shift away from the null")
    sigma_sq: Optional[float] = Field(None, description="Variance used for the sharper version")
