from typing import List, Optional

from pydantic import BaseModel, ConfigDict


class DefectReport(BaseModel):
    """How far a gate is from dual unitarity, in both normalizations."""

    model_config = ConfigDict(frozen=True)

    q: int
    gram_defect: float
    choi_defect: float
    # q^2 * choi_defect, the unnormalized form used by the q=2 certificate
    choi_defect_unnormalized: float
    choi_gram_consistent: bool
    is_dual: bool


class ProjectionResult(BaseModel):
    """Outcome of the alternating polar projection."""

    model_config = ConfigDict(frozen=True)

    converged: bool
    iterations: int
    defect_trace: List[float]
    distance: float


class NearestDualReport(BaseModel):
    """q=2 snapping result with its 14 sqrt(delta) certificate."""

    model_config = ConfigDict(frozen=True)

    distance: float
    delta: float
    certificate: float
    certificate_holds: Optional[bool] = None
    J: List[float]
    J_projected: List[float]
