import math
from typing import List, Literal

from app.api.routing import CommandResult, CommandRouter, RunContext
from app.api.zigzag import growth_check, record_payload, velocity
from app.exceptions import UsageError
from app.models.circuit import EntanglementRecord
from app.schemas.config import AcceptanceCheck, CommandParams
from app.services import file_storage
from app.services.circuit import (
    GROWTH_SLACK,
    evolve,
    initial_state,
    kicked_ising_circuit,
    zigzag_check,
)

router = CommandRouter()

# layer after which each class shows an exact zigzag
ZIGZAG_TIME = {"T": 1, "L": 2}


class KickedIsingParams(CommandParams):
    L: int = 12
    steps: int = 6
    J: float = math.pi / 4
    b: float = math.pi / 4
    h: float = 0.3
    state: Literal["T", "L", "both"] = "both"
    phi: float = 0.0
    bits: str = ""
    first_parity: int = 0


def _initial(params: KickedIsingParams, state_class: str):
    if state_class == "T":
        return initial_state("kicked-ising-T", params.L, 2, {"phi": params.phi})
    if set(params.bits) - {"0", "1"}:
        raise UsageError(f"--bits must be a string of 0 and 1, got '{params.bits}'")
    bits = [int(c) for c in params.bits] if params.bits else 0
    return initial_state("kicked-ising-L", params.L, 2, {"bits": bits})


def class_checks(record: EntanglementRecord, state_class: str, tolerance: float) -> List[AcceptanceCheck]:
    """Exact zigzag at the class's zigzag time, then 2 ln q per two layers at the central cut."""
    t0 = ZIGZAG_TIME[state_class]
    checks = []
    if t0 < len(record.profiles):
        is_zigzag, _ = zigzag_check(record.profiles[t0], record.q, tolerance)
        checks.append(
            AcceptanceCheck(
                name=f"{state_class}_zigzag_t{t0}",
                value=1.0 if is_zigzag else 0.0,
                target=1.0,
                tolerance=0.0,
            )
        )
    central = record.series(record.central_cut)
    for t in range(t0, len(record.times) - 2):
        if record.light_cone_valid[t + 2]:
            checks.append(
                AcceptanceCheck(
                    name=f"{state_class}_growth_t{t}",
                    value=float(central[t + 2] - central[t]),
                    target=2 * math.log(record.q),
                    tolerance=tolerance,
                )
            )
    return checks


@router.command(
    "kicked-ising",
    KickedIsingParams,
    tolerances={"exact": 1e-9, "growth": GROWTH_SLACK},
    csv=True,
)
def run_kicked_ising(params: KickedIsingParams, context: RunContext) -> CommandResult:
    """Kicked-Ising chain from the separating product states (T: xy plane, L: z axis)."""
    classes = ["T", "L"] if params.state == "both" else [params.state]
    circuit = kicked_ising_circuit(params.L, params.J, params.b, params.h, params.first_parity)

    result, checks, summary, rows = {}, [], {}, []
    for state_class in classes:
        record = evolve(circuit, _initial(params, state_class), params.steps)
        payload = record_payload(record)
        payload["v_E"] = velocity(record, ZIGZAG_TIME[state_class])
        result[state_class] = payload
        checks.append(
            growth_check(record, context.tolerance("growth"), name=f"{state_class}_growth_bound")
        )
        checks.extend(class_checks(record, state_class, context.tolerance("exact")))
        for t, s in zip(record.times, record.series(record.central_cut)):
            summary[f"{state_class} S(t={t})"] = float(s)
        rows.extend({"class": state_class, **row} for row in file_storage.record_rows(record))

    csv_text = file_storage.rows_to_csv(rows) if context.wants_csv else None
    return CommandResult(result=result, checks=checks, csv=csv_text, summary=summary)
