"""Seeded Monte Carlo over Haar ensembles and the eps-delta perturbation scan.

Sample k of a run with master seed s draws from SeedSequence([s, k]), so a
result depends on (parameters, s, n_samples) and not on how many worker
processes shared the work.
"""
import logging
import math
from functools import partial
from multiprocessing import Pool
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy import linalg

from app.dependencies.seeding import sample_generator
from app.dependencies.settings import get_settings
from app.exceptions import NotDualError, UsageError
from app.models.gate import Gate
from app.schemas.ensemble import EnsembleStats, EpsDeltaPoint, EpsDeltaScan
from app.services import qinfo
from app.services.cartan import nearest_dual_q2
from app.services.four_party import four_party_report
from app.services.gates import (
    choi_output_state,
    defects,
    haar_gate,
    is_dual,
    kicked_ising_gate,
    random_hermitian,
    swap_gate,
)

logger = logging.getLogger(__name__)

NOISE_FLOOR = 1e-12
DEFAULT_THETAS = (0.0, *np.geomspace(1e-3, 1e-1, 9))


def choi_fidelity_target() -> float:
    """Large-q Haar average of F(rho_AB', I/q^2), 8 / (3 pi)."""
    return 8.0 / (3.0 * math.pi)


def catalan(n: int) -> int:
    """C_n = (2n)! / (n! (n+1)!)."""
    if n < 0:
        raise UsageError(f"Catalan index must be nonnegative, got {n}")
    return math.comb(2 * n, n) // (n + 1)


def purity_target(q: int, n: int) -> float:
    """Leading Haar value of Tr rho_AB'^n, C_n / q^{2(n-1)}."""
    return catalan(n) / q ** (2 * (n - 1))


# ---------------------------------------------------------------------------
# Per-sample quantities; top level so worker processes can unpickle them


def _choi_spectrum(q: int, master_seed: int, index: int) -> np.ndarray:
    gate = haar_gate(q, sample_generator(master_seed, index))
    return choi_output_state(gate).eigenvalues()


def choi_fidelity_sample(q: int, master_seed: int, index: int) -> float:
    # F(rho, I/d) = Tr sqrt(rho) / sqrt(d)
    return float(np.sum(np.sqrt(_choi_spectrum(q, master_seed, index))) / q)


def purity_moment_sample(n: int, q: int, master_seed: int, index: int) -> float:
    return float(np.sum(_choi_spectrum(q, master_seed, index) ** n))


def state_fidelity_sample(q: int, master_seed: int, index: int) -> float:
    state = qinfo.haar_state((q, q), sample_generator(master_seed, index))
    singular = linalg.svdvals(state.amplitudes.reshape(q, q))
    return float(np.sum(singular) / math.sqrt(q))


def _collect(
    sample: Callable[[int], float],
    n_samples: int,
    master_seed: int,
    workers: Optional[int],
    keep_values: bool,
) -> EnsembleStats:
    if n_samples < 2:
        raise UsageError(f"Need at least 2 samples for a standard error, got {n_samples}")
    if master_seed is None:
        raise UsageError("Ensemble experiments need a seed")
    workers = get_settings().workers if workers is None else workers
    if workers > 1:
        with Pool(processes=workers) as pool:
            values = pool.map(sample, range(n_samples), chunksize=max(n_samples // (4 * workers), 1))
    else:
        values = [sample(index) for index in range(n_samples)]

    array = np.asarray(values, dtype=float)
    mean = float(np.mean(array))
    standard_error = float(np.std(array, ddof=1) / math.sqrt(n_samples))
    logger.info("%d samples: mean %.6f +- %.6f", n_samples, mean, standard_error)
    return EnsembleStats(
        n_samples=n_samples,
        mean=mean,
        standard_error=standard_error,
        seed=master_seed,
        values=array.tolist() if keep_values else None,
    )


def _check_q(q: int) -> None:
    if q < 2:
        raise UsageError(f"Local dimension must be at least 2, got q={q}")


def haar_choi_fidelity(
    q: int, n_samples: int, seed: int, workers: Optional[int] = None, keep_values: bool = False
) -> EnsembleStats:
    """Mean F(rho_AB', I/q^2) over Haar gates."""
    _check_q(q)
    sample = partial(choi_fidelity_sample, q, seed)
    return _collect(sample, n_samples, seed, workers, keep_values)


def haar_purity_moment(
    q: int, n: int, n_samples: int, seed: int, workers: Optional[int] = None,
    keep_values: bool = False,
) -> EnsembleStats:
    """Mean Tr rho_AB'^n over Haar gates; compare with purity_target(q, n)."""
    _check_q(q)
    if n not in (2, 3, 4):
        raise UsageError(f"Moment order must be 2, 3 or 4, got n={n}")
    sample = partial(purity_moment_sample, n, q, seed)
    return _collect(sample, n_samples, seed, workers, keep_values)


def haar_state_fidelity(
    q: int, n_samples: int, seed: int, workers: Optional[int] = None, keep_values: bool = False
) -> EnsembleStats:
    """Mean F(rho_A, I/q) over Haar two-qudit pure states."""
    _check_q(q)
    sample = partial(state_fidelity_sample, q, seed)
    return _collect(sample, n_samples, seed, workers, keep_values)


# ---------------------------------------------------------------------------
# eps-delta scan


def _floor(value: float) -> float:
    return 0.0 if abs(value) < NOISE_FLOOR else float(value)


def perturbed_gate(base: Gate, direction: np.ndarray, theta: float) -> Gate:
    """u(theta) = base exp(-i theta H)."""
    return Gate(base.q, base.matrix @ linalg.expm(-1j * theta * direction))


def eps_delta_scan(
    base: Gate,
    direction: Optional[np.ndarray] = None,
    thetas: Sequence[float] = DEFAULT_THETAS,
    seed: int = 0,
    base_name: str = "custom",
) -> EpsDeltaScan:
    """Entanglement deficit against dual-unitarity defect along base exp(-i theta H).

    H is rescaled to unit operator norm; a random one is drawn from `seed`
    when none is given. At q=2 every point also carries the distance to the
    snapped dual gate and the 14 sqrt(q^2 delta) certificate.
    """
    q = base.q
    if not is_dual(base):
        raise NotDualError(f"Base gate '{base_name}' is not dual unitary")
    if direction is None:
        direction = random_hermitian(q * q, seed)
    direction = np.asarray(direction, dtype=complex)
    if not np.allclose(direction, direction.conj().T, atol=1e-12):
        raise UsageError("Perturbation direction must be Hermitian")
    direction = direction / np.linalg.norm(direction, 2)

    bell = qinfo.bell_state(q)
    input_state = qinfo.tensor_product(bell, bell)
    points: List[EpsDeltaPoint] = []
    for theta in thetas:
        gate = perturbed_gate(base, direction, float(theta))
        report = four_party_report(gate, input_state, (q, q, q, q))
        delta = _floor(defects(gate).choi_defect)
        fields = {"theta": float(theta), "epsilon": _floor(report.epsilon), "delta": delta}
        if q == 2:
            _, nearest = nearest_dual_q2(gate)
            fields.update(
                dist_to_projection=_floor(nearest.distance),
                certificate=nearest.certificate,
                certificate_holds=nearest.certificate_holds,
            )
        points.append(EpsDeltaPoint(**fields))
        logger.debug("theta=%.3e eps=%.3e delta=%.3e", theta, fields["epsilon"], delta)

    constant, slope = _fit(points)
    logger.info("eps-delta scan of %s: C=%s slope=%s", base_name, constant, slope)
    return EpsDeltaScan(base=base_name, q=q, points=points, constant=constant, slope=slope)


def _fit(points: Sequence[EpsDeltaPoint]):
    usable = [p for p in points if p.theta > 0 and p.epsilon > 0 and p.delta > 0]
    if not usable:
        return None, None
    constant = max(p.delta / math.sqrt(p.epsilon) for p in usable)
    if len(usable) < 2:
        return constant, None
    log_eps = np.log([p.epsilon for p in usable])
    log_delta = np.log([p.delta for p in usable])
    slope, _ = np.polyfit(log_eps, log_delta, 1)
    return float(constant), float(slope)


def dual_bases(seed: int = 0) -> dict:
    """Swap, dual kicked Ising and a snapped Haar gate, all at q=2."""
    snapped, _ = nearest_dual_q2(haar_gate(2, seed))
    return {
        "swap": swap_gate(2),
        "kicked-ising": kicked_ising_gate(math.pi / 4, math.pi / 4, 0.3),
        "haar-projected": snapped,
    }
