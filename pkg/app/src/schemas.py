"""Pydantic documents for instance files, solutions, reports and run settings"""
from typing import Annotated, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, computed_field, field_validator


# Instance documents

class _Document(BaseModel):
    model_config = ConfigDict(extra="forbid")


class HousingQuasilinearDoc(_Document):
    kind: Literal["housing-quasilinear"]
    values: List[List[float]]


class KkmWeightedArgmaxDoc(_Document):
    kind: Literal["kkm-weighted-argmax"]
    weights: List[List[float]]


class CakeSegment(_Document):
    start: float
    end: float
    density: float


class CakePiecewiseDoc(_Document):
    kind: Literal["cake-piecewise"]
    players: List[List[CakeSegment]]


class SpernerTriangleDoc(_Document):
    kind: Literal["sperner-triangle"]
    N: int = Field(ge=1)
    colors: List[int]


class SpernerCubeDoc(_Document):
    kind: Literal["sperner-cube"]
    d: int = Field(ge=1)
    N: int = Field(ge=1)
    colors: List[int]


class ComposedDoc(_Document):
    """A base instance plus the reduction chain replayed on load"""
    kind: Literal["composed"]
    base: "InstanceDoc"
    chain: List[str]
    epsilon: Optional[float] = None
    epsilons: List[float]


InstanceDoc = Annotated[
    Union[
        HousingQuasilinearDoc,
        KkmWeightedArgmaxDoc,
        CakePiecewiseDoc,
        SpernerTriangleDoc,
        SpernerCubeDoc,
        ComposedDoc,
    ],
    Field(discriminator="kind"),
]

ComposedDoc.model_rebuild()


# Results

class LedgerEntry(BaseModel):
    layer: str
    counts: Dict[str, int] = {}

    @property
    def total(self) -> int:
        return sum(self.counts.values())


class Solution(BaseModel):
    problem: Literal["housing", "rkkm", "kkm", "cake", "sperner"]
    epsilon: float
    point: List[float] = []
    perm: List[int] = []
    witnesses: List[List[float]] = []
    epsilon_achieved: float = 0.0
    envy: Optional[float] = None
    cell: Optional[List[List[int]]] = None
    colors: Optional[List[int]] = None
    queries: List[LedgerEntry] = []
    source: Optional["Solution"] = None
    created_at: Optional[str] = None

    def layer_total(self, layer: str) -> int:
        return sum(entry.total for entry in self.queries if entry.layer == layer)


Solution.model_rebuild()


class Violation(BaseModel):
    check: str
    witness: List[float] = []
    detail: str


class Report(BaseModel):
    violations: List[Violation] = []
    notes: List[str] = []

    @computed_field
    @property
    def passed(self) -> bool:
        return not self.violations

    def add(self, check: str, detail: str, witness=()):
        self.violations.append(Violation(check=check, witness=[float(w) for w in witness], detail=detail))

    def merge(self, other: "Report") -> "Report":
        return Report(violations=self.violations + other.violations, notes=sorted(set(self.notes + other.notes)))

    def checks_failed(self) -> List[str]:
        return sorted({v.check for v in self.violations})


class RunConfig(BaseModel):
    command: str
    instance: Optional[str] = None
    epsilon: Optional[float] = None
    seed: int = 0
    deterministic: bool = True
    workers: int = Field(default=1, ge=1)
    memoize: bool = False
    out: Optional[str] = None

    @field_validator("epsilon")
    @classmethod
    def epsilon_in_range(cls, value):
        if value is not None and not 0.0 < value < 0.25:
            raise ValueError("epsilon must lie in the open interval (0, 1/4)")
        return value
