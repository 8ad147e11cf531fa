from app.api.routing import CommandResult, CommandRouter, RunContext
from app.schemas.config import AcceptanceCheck, CommandParams
from app.schemas.ensemble import EnsembleStats
from app.services import file_storage
from app.services.ensemble import (
    catalan,
    choi_fidelity_target,
    haar_choi_fidelity,
    haar_purity_moment,
    haar_state_fidelity,
    purity_target,
)

router = CommandRouter()

# relative tolerance on mean * q^{2(n-1)} against C_n, per moment order
CATALAN_TOLERANCES = {"moment2": 0.02, "moment3": 0.05, "moment4": 0.10}


class FidelityParams(CommandParams):
    q: int = 16
    samples: int = 2000


class StateFidelityParams(CommandParams):
    q: int = 32
    samples: int = 2000


class CatalanParams(CommandParams):
    q: int = 16
    samples: int = 2000
    n: int = 2


def _envelope(stats: EnsembleStats, target: float, check: AcceptanceCheck, context: RunContext):
    result = {
        "n_samples": stats.n_samples,
        "mean": stats.mean,
        "standard_error": stats.standard_error,
        "target": target,
        "tolerance": check.tolerance,
    }
    csv = file_storage.values_to_csv(stats.values) if context.wants_csv else None
    return CommandResult(result=result, checks=[check], csv=csv)


@router.command(
    "haar-fidelity", FidelityParams, tolerances={"mean": 0.01}, stochastic=True, csv=True
)
def run_haar_fidelity(params: FidelityParams, context: RunContext) -> CommandResult:
    """Haar average of F(rho_AB', I/q^2) against 8/(3 pi)."""
    stats = haar_choi_fidelity(
        params.q, params.samples, context.seed, context.workers, keep_values=context.wants_csv
    )
    target = choi_fidelity_target()
    check = AcceptanceCheck(
        name="mean_fidelity", value=stats.mean, target=target, tolerance=context.tolerance("mean")
    )
    return _envelope(stats, target, check, context)


@router.command(
    "state-fidelity", StateFidelityParams, tolerances={"mean": 0.01}, stochastic=True, csv=True
)
def run_state_fidelity(params: StateFidelityParams, context: RunContext) -> CommandResult:
    """Haar average of F(rho_A, I/q) for two-qudit pure states against 8/(3 pi)."""
    stats = haar_state_fidelity(
        params.q, params.samples, context.seed, context.workers, keep_values=context.wants_csv
    )
    target = choi_fidelity_target()
    check = AcceptanceCheck(
        name="mean_fidelity", value=stats.mean, target=target, tolerance=context.tolerance("mean")
    )
    return _envelope(stats, target, check, context)


@router.command("catalan", CatalanParams, tolerances=CATALAN_TOLERANCES, stochastic=True, csv=True)
def run_catalan(params: CatalanParams, context: RunContext) -> CommandResult:
    """Haar average of Tr rho_AB'^n against C_n / q^{2(n-1)}."""
    stats = haar_purity_moment(
        params.q, params.n, params.samples, context.seed, context.workers,
        keep_values=context.wants_csv,
    )
    target = purity_target(params.q, params.n)
    check = AcceptanceCheck(
        name=f"moment{params.n}",
        value=stats.mean,
        target=target,
        tolerance=context.tolerance(f"moment{params.n}"),
        kind="rel",
    )
    outcome = _envelope(stats, target, check, context)
    outcome.result["catalan"] = catalan(params.n)
    outcome.result["scaled_mean"] = stats.mean * params.q ** (2 * (params.n - 1))
    return outcome
