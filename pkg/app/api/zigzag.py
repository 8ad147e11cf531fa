import math
from typing import Dict, List, Optional

from app.api.routing import CommandResult, CommandRouter, GateParams, RunContext, resolve_gate
from app.exceptions import EstimationError, UsageError
from app.models.circuit import BrickworkCircuit, EntanglementRecord
from app.schemas.config import AcceptanceCheck
from app.services import file_storage
from app.services.circuit import GROWTH_SLACK, estimate_vE, evolve, initial_state, valley_parity

router = CommandRouter()

ZIGZAG_INITIALS = ("dimer", "product", "kicked-ising-T", "kicked-ising-L")


class ZigzagParams(GateParams):
    L: int = 16
    steps: int = 6
    alternate_gate: Optional[str] = None
    initial: str = "dimer"
    first_parity: Optional[int] = None


def growth_check(record: EntanglementRecord, tolerance: float, name: str = "growth_bound") -> AcceptanceCheck:
    """Largest single-layer increase at any cut against 2 ln q."""
    increases = record.layer_increases()
    return AcceptanceCheck(
        name=name,
        value=float(increases.max()) if increases.size else 0.0,
        target=2 * math.log(record.q),
        tolerance=tolerance,
        kind="max",
    )


def record_payload(record: EntanglementRecord) -> Dict:
    cut = record.central_cut
    return {
        "times": record.times,
        "central_cut": cut,
        "central_entropy": record.series(cut).tolist(),
        "light_cone_valid": record.light_cone_valid,
        "profiles": [profile.tolist() for profile in record.profiles],
    }


def velocity(record: EntanglementRecord, start: int) -> Optional[float]:
    """v_E over the light-cone-valid times start, start+2, ...; None if too short."""
    valid = [t for t, ok in zip(record.times, record.light_cone_valid) if ok and t >= start]
    if not valid:
        return None
    stop = start + 2 * ((valid[-1] - start) // 2)
    try:
        rate, _ = estimate_vE(record, window=(start, stop))
    except EstimationError:
        return None
    return rate


def _mixed_bonds(L: int, alternate) -> Dict:
    # every other pair of bonds takes the alternate gate
    return {(None, bond): alternate for bond in range(L - 1) if bond % 4 >= 2}


@router.command(
    "zigzag",
    ZigzagParams,
    tolerances={"exact": 1e-9, "growth": GROWTH_SLACK},
    csv=True,
)
def run_zigzag(params: ZigzagParams, context: RunContext) -> CommandResult:
    """Brickwork evolution from a zigzag state; central cut grows by ln q per layer."""
    if params.initial not in ZIGZAG_INITIALS:
        raise UsageError(f"--initial must be one of {', '.join(ZIGZAG_INITIALS)}")
    gate = resolve_gate(params, context.seed)
    bond_gates = {}
    if params.alternate_gate is not None:
        alternate = resolve_gate(params.model_copy(update={"gate": params.alternate_gate}), context.seed)
        bond_gates = _mixed_bonds(params.L, alternate)

    initial = initial_state(params.initial, params.L, params.q)
    valleys = valley_parity(initial, params.q)
    first_parity = params.first_parity
    if first_parity is None:
        first_parity = valleys if valleys is not None else 0
    circuit = BrickworkCircuit.uniform(
        params.L, gate, bond_gates=bond_gates, first_parity=first_parity
    )
    record = evolve(circuit, initial, params.steps)

    ln_q = math.log(params.q)
    central = record.series(record.central_cut)
    checks: List[AcceptanceCheck] = [growth_check(record, context.tolerance("growth"))]
    if valleys is not None and first_parity == valleys:
        for t, valid in zip(record.times, record.light_cone_valid):
            if t % 2 == 0 and valid:
                checks.append(
                    AcceptanceCheck(
                        name=f"central_entropy_t{t}",
                        value=float(central[t] - central[0]),
                        target=t * ln_q,
                        tolerance=context.tolerance("exact"),
                    )
                )

    result = record_payload(record)
    result.update(
        gate=params.gate,
        alternate_gate=params.alternate_gate,
        first_parity=first_parity,
        v_E=velocity(record, 0),
    )
    return CommandResult(
        result=result,
        checks=checks,
        csv=file_storage.record_to_csv(record) if context.wants_csv else None,
        summary={f"S(t={t})": float(s) for t, s in zip(record.times, central)},
    )
