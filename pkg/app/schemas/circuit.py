import math
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field


class InequalityCheck(BaseModel):
    """One audited inequality: value compared with bound at the given slack."""

    model_config = ConfigDict(frozen=True)

    name: str
    value: float
    bound: float
    kind: str  # ">=" or "<="
    slack: float = 1e-9

    @property
    def holds(self) -> bool:
        if self.kind == ">=":
            return self.value >= self.bound - self.slack
        return self.value <= self.bound + self.slack


class FourPartyReport(BaseModel):
    """Entropy, information and fidelity audit of one gate inside an ABCD split.

    Field names serialize exactly as ΔS, ε, cond_A, ... (by_alias).
    """

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    q: int
    dims: List[int]
    delta_S: float = Field(alias="ΔS")
    epsilon: float = Field(alias="ε")
    cond_A: float
    cond_D: float
    S_B: float
    S_Bp: float
    S_C: float
    S_Cp: float
    S_BC: float
    I_AB_C: float
    I_B_CD: float
    I_A_Bp: float
    I_Cp_D: float
    F_out: float
    F_in: float
    F_BC: float
    F_out_right: float
    F_in_left: float
    D_out: float
    D_in: float
    choi_defect: float
    delta_over_sqrt_eps: Optional[float] = None
    bounds_vacuous: bool
    distillable_structure_exact: bool
    reconstruction_distance: Optional[float] = None
    reconstruction_bound: Optional[float] = None
    # Uhlmann fidelities of the A-side and D-side alignment steps
    reconstruction_fidelities: Optional[List[float]] = None

    def checks(self) -> List[InequalityCheck]:
        """Every inequality implied by the measured ε."""
        ln_q = math.log(self.q)
        eps = self.epsilon
        floor = math.exp(-eps)
        trace_bound = 2 * math.sqrt(max(1 - math.exp(-2 * eps), 0.0))
        checks = [
            InequalityCheck(name="growth_bound", value=self.delta_S, bound=2 * ln_q, kind="<="),
            InequalityCheck(name="cond_A", value=self.cond_A, bound=ln_q - eps, kind=">="),
            InequalityCheck(name="cond_D", value=self.cond_D, bound=ln_q - eps, kind=">="),
        ]
        for name in ("S_B", "S_Bp", "S_C", "S_Cp"):
            checks.append(
                InequalityCheck(name=name, value=getattr(self, name), bound=ln_q - eps, kind=">=")
            )
        checks.append(
            InequalityCheck(name="S_BC", value=self.S_BC, bound=2 * ln_q - 2 * eps, kind=">=")
        )
        for name in ("I_AB_C", "I_B_CD", "I_A_Bp", "I_Cp_D"):
            checks.append(
                InequalityCheck(name=name, value=getattr(self, name), bound=eps, kind="<=")
            )
        for name in ("F_out", "F_in", "F_BC", "F_out_right", "F_in_left"):
            checks.append(
                InequalityCheck(name=name, value=getattr(self, name), bound=floor, kind=">=")
            )
        for name in ("D_out", "D_in"):
            checks.append(
                InequalityCheck(name=name, value=getattr(self, name), bound=trace_bound, kind="<=")
            )
        if self.reconstruction_distance is not None:
            checks.append(
                InequalityCheck(
                    name="reconstruction",
                    value=self.reconstruction_distance,
                    bound=self.reconstruction_bound,
                    kind="<=",
                )
            )
        return checks

    def failed_checks(self) -> List[str]:
        return [check.name for check in self.checks() if not check.holds]

    def to_flat_dict(self) -> dict:
        """Flat JSON-ready mapping keyed by the report's field names."""
        payload = self.model_dump(by_alias=True)
        payload["failed_checks"] = self.failed_checks()
        payload["all_checks_pass"] = not payload["failed_checks"]
        return payload
