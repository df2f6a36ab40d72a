import math
from enum import Enum
from typing import List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.core.problems import map_observation
from app.models.evalue import EValuePair
from app.models.problem import ProblemSpec

PROB_SUM_TOL = 1e-12


class Atom(BaseModel):
    model_config = ConfigDict(frozen=True)

    pair: EValuePair = Field(..., description="E-value pair produced by this outcome")
    prob: float = Field(..., gt=0.0, le=1.0, description="Probability of the outcome")
    x: Optional[float] = Field(None, description="Raw observation that generated the pair")
    y: Optional[float] = Field(None, description="Second raw observation for paired problems")


class FiniteDistribution(BaseModel):
    """Finite-support alternative over e-value pairs."""

    model_config = ConfigDict(
        frozen=True,
        json_schema_extra={
            "example": {
                "atoms": [
                    {"pair": {"e1": 0.0, "e2": 2.5}, "prob": 0.9, "x": 1.0},
                    {"pair": {"e1": 1.6667, "e2": 0.0}, "prob": 0.1, "x": 0.0},
                ],
                "problem": {"kind": "bounded_two_sided", "mu0": 0.4},
            }
        },
    )

    atoms: List[Atom] = Field(..., min_length=1, description="Support points with probabilities")
    problem: Optional[ProblemSpec] = Field(None, description="Problem the pairs were mapped under")

    @model_validator(mode="after")
    def _probabilities_sum_to_one(self) -> "FiniteDistribution":
        total = math.fsum(atom.prob for atom in self.atoms)
        if abs(total - 1.0) > PROB_SUM_TOL:
            raise ValueError(f"atom probabilities sum to {total!r}, expected 1")
        return self

    @classmethod
    def from_values(
        cls,
        values: List[Union[float, Tuple[float, float]]],
        probs: List[float],
        problem: ProblemSpec,
    ) -> "FiniteDistribution":
        """Map raw observations through the problem's pair map; zero-probability outcomes are dropped."""
        if len(values) != len(probs):
            raise ValueError(f"{len(values)} values but {len(probs)} probabilities")
        total = math.fsum(probs)
        atoms = []
        for value, prob in zip(values, probs):
            if prob <= 0.0:
                continue
            x, y = (value if isinstance(value, (tuple, list)) else (value, None))
            atoms.append(
                Atom(pair=map_observation(problem, x, y), prob=prob / total, x=x, y=y)
            )
        return cls(atoms=atoms, problem=problem)

    @classmethod
    def bernoulli(cls, q: float, problem: ProblemSpec) -> "FiniteDistribution":
        return cls.from_values([1.0, 0.0], [q, 1.0 - q], problem)

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(e1, e2, prob) arrays over the atoms."""
        e1 = np.array([atom.pair.e1 for atom in self.atoms])
        e2 = np.array([atom.pair.e2 for atom in self.atoms])
        probs = np.array([atom.prob for atom in self.atoms])
        return e1, e2, probs


class SourceKind(str, Enum):
    BERNOULLI = "bernoulli"
    DISCRETE = "discrete"
    BETA = "beta"


class SourceDistribution(BaseModel):
    """Data-generating distribution for simulated observations."""

    model_config = ConfigDict(
        frozen=True,
        extra="forbid",
        json_schema_extra={"example": {"kind": "bernoulli", "p": 0.4}},
    )

    kind: SourceKind = Field(..., description="Family of the source")
    p: Optional[float] = Field(None, ge=0.0, le=1.0, description="Success probability (bernoulli)")
    values: Optional[List[Union[float, Tuple[float, float]]]] = Field(
        None, description="Support points on [0,1], or [x, y] points on [0,1]^2 for diff-means (discrete)"
    )
    probs: Optional[List[float]] = Field(None, description="Probabilities of the support points (discrete)")
    a: Optional[float] = Field(None, gt=0.0, description="First shape parameter (beta)")
    b: Optional[float] = Field(None, gt=0.0, description="Second shape parameter (beta)")
    bins: int = Field(200, ge=2, description="Equal-width bins used to discretise a beta source for the oracle")
    y_source: Optional["SourceDistribution"] = Field(
        None, description="Independent source for the second sample of a diff-means problem"
    )

    @field_validator("values")
    @classmethod
    def _values_in_unit_box(cls, values):
        if values is None:
            return values
        for value in values:
            coords = value if isinstance(value, (tuple, list)) else (value,)
            if any(not 0.0 <= c <= 1.0 for c in coords):
                raise ValueError(f"support point {value!r} outside [0, 1]")
        return values

    @model_validator(mode="after")
    def _parameters_for_kind(self) -> "SourceDistribution":
        if self.kind == SourceKind.BERNOULLI and self.p is None:
            raise ValueError("bernoulli sources need p")
        if self.kind == SourceKind.BETA and (self.a is None or self.b is None):
            raise ValueError("beta sources need a and b")
        if self.kind == SourceKind.DISCRETE:
            if not self.values or self.probs is None or len(self.values) != len(self.probs):
                raise ValueError("discrete sources need values and probs of equal length")
            if any(prob < 0.0 for prob in self.probs):
                raise ValueError("discrete probabilities must be non-negative")
            if abs(math.fsum(self.probs) - 1.0) > 1e-9:
                raise ValueError(f"discrete probabilities sum to {math.fsum(self.probs)!r}, expected 1")
            dims = {isinstance(v, (tuple, list)) for v in self.values}
            if len(dims) > 1:
                raise ValueError("discrete support mixes scalar and paired points")
        return self

    @property
    def is_paired(self) -> bool:
        return self.kind == SourceKind.DISCRETE and isinstance(self.values[0], (tuple, list))

    @property
    def label(self) -> str:
        if self.kind == SourceKind.BERNOULLI:
            text = f"bernoulli({self.p:g})"
        elif self.kind == SourceKind.BETA:
            text = f"beta({self.a:g},{self.b:g})"
        else:
            text = f"discrete({len(self.values)} atoms)"
        if self.y_source is not None:
            text += f" vs {self.y_source.label}"
        return text


SourceDistribution.model_rebuild()
