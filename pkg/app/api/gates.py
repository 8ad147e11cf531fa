from typing import List

import numpy as np

from app.api.routing import CommandResult, CommandRouter, GateParams, RunContext, resolve_gate
from app.exceptions import UsageError
from app.schemas.circuit import InequalityCheck
from app.schemas.config import AcceptanceCheck, CommandParams
from app.schemas.gate import ProjectionResult
from app.services import file_storage, qinfo
from app.services.cartan import cartan_decompose, nearest_dual_q2
from app.services.ensemble import dual_bases, eps_delta_scan
from app.services.four_party import four_party_report
from app.services.gates import DUAL_ATOL, defects, project_dual_iterative

router = CommandRouter()


class AuditParams(GateParams):
    reconstruct: bool = False


class ProjectParams(GateParams):
    max_iters: int = 200
    projection_tol: float = 1e-10


class ScanParams(CommandParams):
    base: str = "all"
    theta_min: float = 1e-3
    theta_max: float = 1e-1
    points: int = 9


def as_acceptance(check: InequalityCheck) -> AcceptanceCheck:
    return AcceptanceCheck(
        name=check.name,
        value=check.value,
        target=check.bound,
        tolerance=check.slack,
        kind="min" if check.kind == ">=" else "max",
    )


@router.command("audit-gate", AuditParams)
def run_audit_gate(params: AuditParams, context: RunContext) -> CommandResult:
    """Dual-unitarity defects and the four-party report on Bell x Bell."""
    gate = resolve_gate(params, context.seed)
    bell = qinfo.bell_state(gate.q)
    report = four_party_report(
        gate, qinfo.tensor_product(bell, bell), (gate.q,) * 4, reconstruct=params.reconstruct
    )
    result = report.to_flat_dict()
    result["defects"] = defects(gate).model_dump()
    if gate.q == 2:
        result["J"] = list(cartan_decompose(gate).J)
    return CommandResult(
        result=result,
        checks=[as_acceptance(check) for check in report.checks()],
        summary={"ΔS": report.delta_S, "ε": report.epsilon},
    )


@router.command("project-dual", ProjectParams, tolerances={"dual": DUAL_ATOL, "certificate": 1e-9})
def run_project_dual(params: ProjectParams, context: RunContext) -> CommandResult:
    """Nearest dual unitary: Cartan snapping at q=2, alternating projection for any q."""
    gate = resolve_gate(params, context.seed)
    projected, converged, trace = project_dual_iterative(gate, params.max_iters, params.projection_tol)
    projection = ProjectionResult(
        converged=converged,
        iterations=len(trace) - 1,
        defect_trace=trace,
        distance=float(np.linalg.norm(gate.matrix - projected.matrix, "nuc")),
    )
    result = {"before": defects(gate).model_dump(), "projection": projection.model_dump()}
    checks: List[AcceptanceCheck] = []

    if gate.q == 2:
        snapped, nearest = nearest_dual_q2(gate, slack=context.tolerance("certificate"))
        result["nearest_dual"] = nearest.model_dump()
        result["nearest_dual_defect"] = defects(snapped).gram_defect
        checks.append(
            AcceptanceCheck(name="nearest_dual_defect", value=result["nearest_dual_defect"],
                            target=0.0, tolerance=context.tolerance("dual"), kind="max")
        )
        checks.append(
            AcceptanceCheck(name="certificate", value=nearest.distance, target=nearest.certificate,
                            tolerance=context.tolerance("certificate"), kind="max")
        )
    else:
        checks.append(
            AcceptanceCheck(name="projection_defect", value=trace[-1], target=0.0,
                            tolerance=context.tolerance("dual"), kind="max")
        )
    return CommandResult(result=result, checks=checks)


@router.command(
    "scan-eps-delta",
    ScanParams,
    tolerances={
        "origin": 0.0,
        "origin_distance": 1e-9,
        "slope_low": 0.4,
        "slope_high": 1.1,
        "certificate": 1e-9,
    },
    stochastic=True,
    csv=True,
)
def run_scan(params: ScanParams, context: RunContext) -> CommandResult:
    """Entanglement deficit against dual-unitarity defect around dual base gates."""
    bases = dual_bases(context.seed)
    names = list(bases) if params.base == "all" else [params.base]
    unknown = [name for name in names if name not in bases]
    if unknown:
        raise UsageError(f"Unknown base '{unknown[0]}' (known: all, {', '.join(bases)})")
    if not 0 < params.theta_min < params.theta_max or params.points < 2:
        raise UsageError("Need 0 < --theta-min < --theta-max and --points >= 2")
    thetas = [0.0, *np.geomspace(params.theta_min, params.theta_max, params.points)]

    result, checks, rows = {}, [], []
    for name in names:
        scan = eps_delta_scan(bases[name], thetas=thetas, seed=context.seed, base_name=name)
        result[name] = scan.model_dump(by_alias=True)
        origin = scan.points[0]
        checks.extend(
            [
                AcceptanceCheck(name=f"{name}_epsilon_at_origin", value=origin.epsilon,
                                target=0.0, tolerance=context.tolerance("origin")),
                AcceptanceCheck(name=f"{name}_delta_at_origin", value=origin.delta,
                                target=0.0, tolerance=context.tolerance("origin")),
                AcceptanceCheck(name=f"{name}_distance_at_origin", value=origin.dist_to_projection,
                                target=0.0, tolerance=context.tolerance("origin_distance")),
                AcceptanceCheck(name=f"{name}_slope_low", value=scan.slope,
                                target=context.tolerance("slope_low"), tolerance=0.0, kind="min"),
                AcceptanceCheck(name=f"{name}_slope_high", value=scan.slope,
                                target=context.tolerance("slope_high"), tolerance=0.0, kind="max"),
            ]
        )
        for index, point in enumerate(scan.points):
            checks.append(
                AcceptanceCheck(name=f"{name}_certificate[{index}]", value=point.dist_to_projection,
                                target=point.certificate, tolerance=context.tolerance("certificate"),
                                kind="max")
            )
            rows.append({"base": name, **point.model_dump(by_alias=True)})
    csv = file_storage.rows_to_csv(rows) if context.wants_csv else None
    return CommandResult(result=result, checks=checks, csv=csv)
