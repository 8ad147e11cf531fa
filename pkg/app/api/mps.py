import math
from typing import Optional

from app.api.routing import CommandResult, CommandRouter, RunContext
from app.dependencies.seeding import sample_generator
from app.exceptions import UsageError
from app.schemas.config import AcceptanceCheck, CommandParams
from app.services import file_storage
from app.services.mps import (
    cut_entropies_exact,
    random_solvable,
    replica_purity,
    replica_target,
    solvability_defect,
    spectral_gap,
)

router = CommandRouter()


class MPSParams(CommandParams):
    q: int = 2
    chi: int = 2
    samples: int = 1
    max_replica: int = 3
    file: Optional[str] = None
    save: Optional[str] = None


@router.command("mps", MPSParams, tolerances={"exact": 1e-8})
def run_mps(params: MPSParams, context: RunContext) -> CommandResult:
    """Cut entropies and replica purities of solvable MPS."""
    if params.max_replica not in (2, 3, 4):
        raise UsageError("--max-replica must be 2, 3 or 4")
    if params.file is not None:
        pairs = [file_storage.load_mps(params.file, check_solvable=True)]
    else:
        if context.seed is None:
            raise UsageError("mps needs --seed unless --file is given")
        pairs = [
            random_solvable(params.q, params.chi, sample_generator(context.seed, index))
            for index in range(params.samples)
        ]
    if params.save is not None:
        file_storage.save_mps(pairs[0], params.save)

    tolerance = context.tolerance("exact")
    samples, checks, summary = [], [], {}
    for index, pair in enumerate(pairs):
        E_AB, E_BA = cut_entropies_exact(pair)
        gap, degenerate = spectral_gap(pair)
        purities = {n: replica_purity(pair, n) for n in range(2, params.max_replica + 1)}
        samples.append(
            {
                "q": pair.q,
                "chi": pair.chi,
                "solvability_defect": solvability_defect(pair),
                "E_AB": E_AB,
                "E_BA": E_BA,
                "transfer_gap": gap,
                "degenerate_fixed_point": degenerate,
                "replica_purity": {str(n): value for n, value in purities.items()},
            }
        )
        checks.append(
            AcceptanceCheck(name=f"E_AB[{index}]", value=E_AB,
                            target=math.log(pair.chi_wide), tolerance=tolerance)
        )
        checks.append(
            AcceptanceCheck(name=f"E_BA[{index}]", value=E_BA,
                            target=math.log(pair.chi), tolerance=tolerance)
        )
        for n, value in purities.items():
            checks.append(
                AcceptanceCheck(name=f"replica_n{n}[{index}]", value=value,
                                target=replica_target(pair, n), tolerance=tolerance)
            )
        summary[f"E_AB[{index}]"] = E_AB
        summary[f"E_BA[{index}]"] = E_BA
    return CommandResult(result={"samples": samples}, checks=checks, summary=summary)
