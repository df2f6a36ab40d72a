from typing import Any, Dict, Optional

from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from app.core.errors import BettingError, ConfigError, DomainError, InvariantViolation
from app.core.oracle import conservative_bounds, rejection_time_bound
from app.models.distribution import SourceDistribution
from app.models.experiment import ExperimentConfig, ExperimentKind
from app.utils.config import Settings, parse_config
from app.utils.result_writer import sanitize
from app.utils.simulation import ExperimentRunner, solve_scenario

app = FastAPI(
    title="Testing by Betting API",
    description="Oracle bets, growth bounds and Monte Carlo runs for sequential tests by betting",
    version="1.0.0",
)

# Configure CORS
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


class OracleRequest(BaseModel):
    problem: str = Field(..., description="Problem string, e.g. 'bounded2:0.3'")
    alternative: SourceDistribution
    alpha: float = Field(0.01, gt=0.0, lt=1.0)


def _raise_http(e: Exception) -> None:
    if isinstance(e, (DomainError, ConfigError)):
        raise HTTPException(status_code=400, detail=str(e))
    if isinstance(e, InvariantViolation):
        raise HTTPException(status_code=409, detail=str(e))
    raise HTTPException(status_code=500, detail=str(e))


@app.get("/api/health")
async def health_check():
    """Health check endpoint."""
    return {"status": "healthy"}


@app.post("/api/oracle")
async def oracle(request: OracleRequest):
    """Log-optimal bet and growth for a known alternative."""
    try:
        config = parse_config(
            {
                "problem": request.problem,
                "alternative": request.alternative.model_dump(),
                "alpha": request.alpha,
            },
            Settings(),
            source="request",
        )
        return sanitize(solve_scenario(config).oracle_report())
    except (BettingError, ValueError) as e:
        _raise_http(e)


@app.get("/api/bounds/conservative")
async def bounds_conservative(
    delta: float = Query(..., ge=-1.0, le=1.0),
    sigma_sq: Optional[float] = Query(None, ge=0.0, le=0.25),
):
    try:
        return sanitize(conservative_bounds(delta, sigma_sq).model_dump())
    except BettingError as e:
        _raise_http(e)


@app.get("/api/bounds/rejection-time")
async def bounds_rejection_time(alpha: float = Query(..., gt=0.0, lt=1.0), ell: float = Query(...)):
    try:
        return {"alpha": alpha, "ell": ell, "bound": rejection_time_bound(alpha, ell)}
    except BettingError as e:
        _raise_http(e)


@app.post("/api/experiments/{kind}")
def run_experiment(kind: ExperimentKind, config: Dict[str, Any]):
    """Run a simulation synchronously and return its summary; nothing is written to disk."""
    if kind == ExperimentKind.ORACLE:
        raise HTTPException(status_code=400, detail="Use POST /api/oracle")
    try:
        parsed: ExperimentConfig = parse_config(config, Settings(), source="request")
        parsed = parsed.model_copy(update={"workers": 1})
        result = ExperimentRunner(parsed).run(kind)
    except BettingError as e:
        _raise_http(e)
    return sanitize(result.summary.model_dump(mode="python"))
