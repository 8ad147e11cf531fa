from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, computed_field


class ExperimentConfig(BaseModel):
    """One resolved command line: subcommand, typed parameters and run options."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    command: str
    params: Dict[str, Any]
    seed: Optional[int] = None
    output: Optional[str] = None
    format: Literal["json", "csv"] = "json"
    tolerances: Dict[str, float] = {}
    check: bool = False
    workers: Optional[int] = None
    units: Literal["nats", "bits"] = "nats"


class CommandParams(BaseModel):
    """Base for subcommand parameters; unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid", frozen=True)


class AcceptanceCheck(BaseModel):
    """A measured value against its target.

    kind "abs": |value - target| <= tolerance; "rel": |value / target - 1| <= tolerance;
    "max": value <= target + tolerance; "min": value >= target - tolerance.
    """

    model_config = ConfigDict(frozen=True)

    name: str
    value: Optional[float]
    target: float
    tolerance: float
    kind: Literal["abs", "rel", "max", "min"] = "abs"

    @computed_field
    @property
    def passed(self) -> bool:
        if self.value is None:
            return False
        if self.kind == "abs":
            return abs(self.value - self.target) <= self.tolerance
        if self.kind == "rel":
            return abs(self.value / self.target - 1.0) <= self.tolerance
        if self.kind == "max":
            return self.value <= self.target + self.tolerance
        return self.value >= self.target - self.tolerance


class ResultEnvelope(BaseModel):
    """Everything written for one run."""

    model_config = ConfigDict(frozen=True)

    schema_version: str
    experiment: str
    params: Dict[str, Any]
    seed: Optional[int] = None
    result: Dict[str, Any]
    checks: List[AcceptanceCheck] = []

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def to_payload(self) -> Dict[str, Any]:
        """Flat JSON document; result fields sit next to the run metadata."""
        payload = {
            "schema_version": self.schema_version,
            "experiment": self.experiment,
            "params": self.params,
            "seed": self.seed,
        }
        payload.update(self.result)
        payload["checks"] = [check.model_dump() for check in self.checks]
        payload["pass"] = self.passed
        return payload
