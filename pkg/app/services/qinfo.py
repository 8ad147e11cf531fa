"""Measurement instruments: partial traces, entropies, distances, divergences,
purification and Uhlmann alignment.

Conventions: subsystems are addressed by position in ``dims``; the first
factor is the most significant digit of a flat index. Entropies are in nats.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import linalg
from scipy.special import xlogy

from app.exceptions import DimensionMismatchError, InvalidStateError
from app.models.state import (
    EIGEN_FLOOR,
    Bipartition,
    DensityMatrix,
    Keep,
    PureState,
    State,
    as_bipartition,
)

logger = logging.getLogger(__name__)

INFINITE_DIVERGENCE = math.inf
# sigma eigenvalues below this count as outside its support
SUPPORT_ATOL = 1e-12
# weight of rho outside supp(sigma) above this makes a divergence infinite
LEAK_ATOL = 1e-10
# eigenvalues below this are dropped before taking square roots
SQRT_CUTOFF = 1e-14


def as_density(state: State) -> DensityMatrix:
    """Promote a pure state to its projector; density matrices pass through."""
    if isinstance(state, PureState):
        return DensityMatrix.from_pure(state)
    return state


def _require_same_dims(rho: State, sigma: State) -> None:
    if tuple(rho.dims) != tuple(sigma.dims):
        raise DimensionMismatchError(
            f"Operands have different dims: {rho.dims} vs {sigma.dims}"
        )


# ---------------------------------------------------------------------------
# Constructors


def basis_state(dims: Sequence[int], digits: Sequence[int]) -> PureState:
    """Computational basis state |digits>."""
    vector = np.zeros(int(np.prod(dims)), dtype=complex)
    vector[np.ravel_multi_index(tuple(digits), tuple(dims))] = 1.0
    return PureState(vector, tuple(dims))


def bell_state(q: int) -> PureState:
    """Maximally entangled pair sum_i |ii> / sqrt(q)."""
    return PureState(np.eye(q, dtype=complex).reshape(-1) / math.sqrt(q), (q, q))


def maximally_mixed(dims: Sequence[int]) -> DensityMatrix:
    size = int(np.prod(dims))
    return DensityMatrix(np.eye(size, dtype=complex) / size, tuple(dims))


def tensor_product(*states: State) -> State:
    """Kronecker product; pure if every factor is pure."""
    dims: Tuple[int, ...] = ()
    if all(isinstance(s, PureState) for s in states):
        vector = np.ones(1, dtype=complex)
        for state in states:
            vector = np.kron(vector, state.amplitudes)
            dims += state.dims
        return PureState(vector, dims)
    matrix = np.ones((1, 1), dtype=complex)
    for state in states:
        density = as_density(state)
        matrix = np.kron(matrix, density.matrix)
        dims += density.dims
    return DensityMatrix.hermitized(matrix, dims)


def haar_state(dims: Sequence[int], rng: np.random.Generator) -> PureState:
    """Haar-random pure state: normalized complex Gaussian vector."""
    size = int(np.prod(dims))
    vector = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    return PureState.normalized(vector, tuple(dims))


def random_density(
    dims: Sequence[int], rng: np.random.Generator, rank: Optional[int] = None
) -> DensityMatrix:
    """Random mixed state G G^dag / Tr, G complex Gaussian of the given rank."""
    size = int(np.prod(dims))
    rank = size if rank is None else rank
    g = rng.standard_normal((size, rank)) + 1j * rng.standard_normal((size, rank))
    matrix = g @ g.conj().T
    return DensityMatrix.hermitized(matrix / np.trace(matrix).real, tuple(dims))


# ---------------------------------------------------------------------------
# Partial trace and local operators


def reduce(state: State, keep: Keep) -> DensityMatrix:
    """Partial trace over every subsystem not in `keep`."""
    n = len(state.dims)
    part = as_bipartition(keep, n)
    kept_dims = tuple(state.dims[k] for k in part.keep)
    kept_size = int(np.prod(kept_dims))

    if isinstance(state, PureState):
        psi = np.moveaxis(state.tensor(), part.keep, range(len(part.keep)))
        psi = psi.reshape(kept_size, -1)
        return DensityMatrix.hermitized(psi @ psi.conj().T, kept_dims)

    tensor = state.matrix.reshape(state.dims + state.dims)
    rows = list(range(n))
    cols = [i if i in part.complement else n + i for i in range(n)]
    out = list(part.keep) + [n + k for k in part.keep]
    reduced = np.einsum(tensor, rows + cols, out)
    return DensityMatrix.hermitized(reduced.reshape(kept_size, kept_size), kept_dims)


def apply_operator(state: PureState, operator: np.ndarray, sites: Sequence[int]) -> PureState:
    """Apply a matrix acting on the listed subsystems (in that order)."""
    sites = list(sites)
    as_bipartition(sites, len(state.dims))
    local_dims = [state.dims[s] for s in sites]
    local_size = int(np.prod(local_dims))
    operator = np.asarray(operator, dtype=complex)
    if operator.shape != (local_size, local_size):
        raise DimensionMismatchError(
            f"Operator of shape {operator.shape} does not act on dims {local_dims}"
        )
    psi = np.moveaxis(state.tensor(), sites, range(len(sites)))
    moved_shape = psi.shape
    psi = (operator @ psi.reshape(local_size, -1)).reshape(moved_shape)
    psi = np.moveaxis(psi, range(len(sites)), sites)
    return PureState.normalized(psi.reshape(-1), state.dims)


def regroup(state: PureState, dims: Sequence[int]) -> PureState:
    """Reinterpret the same amplitudes over a coarser or finer factorization."""
    dims = tuple(int(d) for d in dims)
    if int(np.prod(dims)) != state.amplitudes.size:
        raise DimensionMismatchError(
            f"Cannot regroup {state.amplitudes.size} amplitudes as {dims}"
        )
    return PureState(state.amplitudes, dims)


# ---------------------------------------------------------------------------
# Entropies


def _shannon(probabilities: np.ndarray) -> float:
    return float(-np.sum(xlogy(probabilities, probabilities)))


def entropy_vn(rho: State) -> float:
    """Von Neumann entropy -Tr rho ln rho in nats."""
    if isinstance(rho, PureState):
        return 0.0
    return _shannon(rho.eigenvalues())


def entanglement_entropy(state: PureState, keep: Keep) -> float:
    """Entropy of a pure state's marginal, from the Schmidt coefficients."""
    part = as_bipartition(keep, len(state.dims))
    if not part.keep or not part.complement:
        return 0.0
    psi = np.moveaxis(state.tensor(), part.keep, range(len(part.keep)))
    rows = int(np.prod([state.dims[k] for k in part.keep]))
    singular = linalg.svdvals(psi.reshape(rows, -1))
    return _shannon(singular**2)


def conditional_entropy(rho: State, cond: Keep) -> float:
    """S(XY) - S(Y), with Y the conditioning subsystems."""
    rho = as_density(rho)
    return entropy_vn(rho) - entropy_vn(reduce(rho, cond))


def mutual_information(rho: State, split: Keep) -> float:
    """S(X) + S(Y) - S(XY) for X = split.keep and Y its complement."""
    rho = as_density(rho)
    part = as_bipartition(split, len(rho.dims))
    return (
        entropy_vn(reduce(rho, part.keep))
        + entropy_vn(reduce(rho, part.complement))
        - entropy_vn(rho)
    )


# ---------------------------------------------------------------------------
# Distances and fidelity


def trace_norm_distance(rho: State, sigma: State) -> float:
    """||rho - sigma||_1."""
    _require_same_dims(rho, sigma)
    difference = as_density(rho).matrix - as_density(sigma).matrix
    return float(np.sum(np.abs(np.linalg.eigvalsh(difference))))


def trace_distance(rho: State, sigma: State) -> float:
    """D_tr = ||rho - sigma||_1 / 2."""
    return 0.5 * trace_norm_distance(rho, sigma)


def psd_power(matrix: np.ndarray, power: float) -> np.ndarray:
    """matrix**power on its support; eigenvalues under SQRT_CUTOFF count as zero."""
    values, vectors = np.linalg.eigh(matrix)
    if values.size and values[0] < -EIGEN_FLOOR:
        raise InvalidStateError(f"Operator has negative eigenvalue {values[0]:.3e}")
    kept = values > SQRT_CUTOFF
    powered = np.zeros_like(values)
    powered[kept] = values[kept] ** power
    return (vectors * powered) @ vectors.conj().T


def fidelity(rho: State, sigma: State) -> float:
    """Uhlmann fidelity Tr sqrt(sqrt(rho) sigma sqrt(rho)), not squared.

    Evaluated as the nuclear norm of sqrt(rho) sqrt(sigma), which is
    symmetric in its arguments.
    """
    _require_same_dims(rho, sigma)
    if isinstance(rho, PureState) and isinstance(sigma, PureState):
        return float(abs(np.vdot(rho.amplitudes, sigma.amplitudes)))
    if isinstance(rho, PureState) or isinstance(sigma, PureState):
        pure, mixed = (rho, sigma) if isinstance(rho, PureState) else (sigma, rho)
        psi = pure.amplitudes
        value = float(np.vdot(psi, mixed.matrix @ psi).real)
        return math.sqrt(max(value, 0.0))
    root_rho = psd_power(rho.matrix, 0.5)
    root_sigma = psd_power(sigma.matrix, 0.5)
    value = float(np.sum(linalg.svdvals(root_rho @ root_sigma)))
    return min(value, 1.0)


# ---------------------------------------------------------------------------
# Divergences


def _support_leak(rho: DensityMatrix, sigma_values, sigma_vectors) -> float:
    """Weight of rho on the kernel of sigma."""
    kernel = sigma_vectors[:, sigma_values < SUPPORT_ATOL]
    if kernel.shape[1] == 0:
        return 0.0
    return float(np.trace(kernel.conj().T @ rho.matrix @ kernel).real)


def relative_entropy(rho: State, sigma: State) -> float:
    """S(rho||sigma) = Tr rho (ln rho - ln sigma); INFINITE_DIVERGENCE off support."""
    _require_same_dims(rho, sigma)
    rho, sigma = as_density(rho), as_density(sigma)
    sigma_values, sigma_vectors = np.linalg.eigh(sigma.matrix)
    if _support_leak(rho, sigma_values, sigma_vectors) > LEAK_ATOL:
        return INFINITE_DIVERGENCE
    support = sigma_values >= SUPPORT_ATOL
    weights = np.einsum(
        "ik,ij,jk->k",
        sigma_vectors[:, support].conj(),
        rho.matrix,
        sigma_vectors[:, support],
    ).real
    cross = float(np.sum(weights * np.log(sigma_values[support])))
    return -entropy_vn(rho) - cross


def sandwiched_renyi(rho: State, sigma: State, alpha: float) -> float:
    """(1/(alpha-1)) ln Tr[(sigma^s rho sigma^s)^alpha], s = (1-alpha)/(2 alpha)."""
    if alpha <= 0:
        raise InvalidStateError(f"Renyi order must be positive, got {alpha}")
    if alpha == 1:
        return relative_entropy(rho, sigma)
    _require_same_dims(rho, sigma)
    rho, sigma = as_density(rho), as_density(sigma)

    sigma_values, sigma_vectors = np.linalg.eigh(sigma.matrix)
    if alpha > 1 and _support_leak(rho, sigma_values, sigma_vectors) > LEAK_ATOL:
        return INFINITE_DIVERGENCE

    exponent = (1 - alpha) / (2 * alpha)
    support = sigma_values >= SUPPORT_ATOL
    powered = np.zeros_like(sigma_values)
    powered[support] = sigma_values[support] ** exponent
    sandwich_factor = (sigma_vectors * powered) @ sigma_vectors.conj().T
    sandwich = sandwich_factor @ rho.matrix @ sandwich_factor
    values = np.clip(np.linalg.eigvalsh(0.5 * (sandwich + sandwich.conj().T)), 0.0, None)
    quasi = float(np.sum(values**alpha))
    if quasi <= 0.0:
        return INFINITE_DIVERGENCE
    return math.log(quasi) / (alpha - 1)


@dataclass(frozen=True)
class FidelityChain:
    """Relations between fidelity, trace distance and relative entropy."""

    fidelity: float
    trace_distance: float
    relative_entropy: float
    lower: float  # 1 - F
    upper: float  # sqrt(1 - F^2)
    pinsker: float  # sqrt(S/2), inf when S is
    relative_entropy_fidelity_floor: float  # exp(-S/2)

    @property
    def holds(self) -> bool:
        slack = 1e-10
        return (
            self.lower <= self.trace_distance + slack
            and self.trace_distance <= self.upper + slack
            and self.trace_distance <= self.pinsker + slack
            and self.fidelity + slack >= self.relative_entropy_fidelity_floor
        )


def distance_bounds(rho: State, sigma: State) -> FidelityChain:
    """Evaluate 1-F <= D_tr <= sqrt(1-F^2), Pinsker and F >= exp(-S/2)."""
    f = fidelity(rho, sigma)
    d = trace_distance(rho, sigma)
    s = relative_entropy(rho, sigma)
    finite = math.isfinite(s)
    return FidelityChain(
        fidelity=f,
        trace_distance=d,
        relative_entropy=s,
        lower=1.0 - f,
        upper=math.sqrt(max(1.0 - f * f, 0.0)),
        pinsker=math.sqrt(max(s, 0.0) / 2) if finite else math.inf,
        relative_entropy_fidelity_floor=math.exp(-s / 2) if finite else 0.0,
    )


# ---------------------------------------------------------------------------
# Purification and Uhlmann alignment


def purify(rho: State, cutoff: float = SUPPORT_ATOL) -> PureState:
    """Purification sum_k sqrt(l_k) |v_k>|k>, ancilla dimension = rank(rho).

    Eigenvalues are taken in descending order, so the ancilla basis is
    deterministic up to degeneracies of rho.
    """
    rho = as_density(rho)
    values, vectors = np.linalg.eigh(rho.matrix)
    order = np.argsort(values)[::-1]
    values, vectors = values[order], vectors[:, order]
    kept = values > cutoff
    rank = max(int(np.count_nonzero(kept)), 1)
    amplitudes = vectors[:, :rank] * np.sqrt(np.clip(values[:rank], 0.0, None))
    return PureState.normalized(amplitudes.reshape(-1), rho.dims + (rank,))


def _purification_matrix(state: PureState, ancilla: Bipartition) -> np.ndarray:
    """Amplitudes as a (system x ancilla) matrix."""
    order = list(ancilla.complement) + list(ancilla.keep)
    system_size = int(np.prod([state.dims[i] for i in ancilla.complement]))
    return np.transpose(state.tensor(), order).reshape(system_size, -1)


def uhlmann_align(
    psi: PureState, phi: PureState, ancilla: Keep
) -> Tuple[np.ndarray, float]:
    """Ancilla unitary W maximizing |<phi|(I x W)|psi>|, and that overlap.

    With X = Phi^dag Psi (purifications as system x ancilla matrices) the
    overlap is Tr(W^T X); the SVD X = U S V^dag gives W = conj(U V^dag) and
    overlap Tr S, the fidelity of the two system marginals.
    """
    _require_same_dims(psi, phi)
    part = as_bipartition(ancilla, len(psi.dims))
    cross = _purification_matrix(phi, part).conj().T @ _purification_matrix(psi, part)
    left, singular, right = linalg.svd(cross)
    unitary = np.conj(left @ right)
    overlap = float(np.sum(singular))
    logger.debug("Uhlmann alignment overlap %.12f", overlap)
    return unitary, overlap


def apply_on_ancilla(state: PureState, unitary: np.ndarray, ancilla: Keep) -> PureState:
    """(I x W)|psi> with W acting on the ancilla positions as one register."""
    part = as_bipartition(ancilla, len(state.dims))
    return apply_operator(state, unitary, part.keep)
