from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field


class EnsembleStats(BaseModel):
    """Monte Carlo mean of one per-sample quantity."""

    model_config = ConfigDict(frozen=True)

    n_samples: int
    mean: float
    standard_error: float
    seed: int
    values: Optional[List[float]] = None

    def __repr__(self):
        return f"<EnsembleStats n={self.n_samples} mean={self.mean:.6f} se={self.standard_error:.2e}>"


class EpsDeltaPoint(BaseModel):
    """One perturbation strength of an eps-delta scan."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    theta: float = Field(alias="θ")
    epsilon: float = Field(alias="ε", ge=-1e-9)
    delta: float = Field(alias="δ", ge=0.0)
    dist_to_projection: Optional[float] = None
    certificate: Optional[float] = None
    certificate_holds: Optional[bool] = None


class EpsDeltaScan(BaseModel):
    """Scan points with the fitted constant and log-log slope of delta against epsilon."""

    model_config = ConfigDict(frozen=True)

    base: str
    q: int
    points: List[EpsDeltaPoint]
    constant: Optional[float] = None
    slope: Optional[float] = None

    @property
    def certificates_hold(self) -> bool:
        return all(p.certificate_holds is not False for p in self.points)
