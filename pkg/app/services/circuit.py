"""Brickwork evolution on an open chain and entanglement-profile analysis."""
import logging
import math
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import linalg
from scipy.special import xlogy

from app.dependencies.settings import check_capacity
from app.exceptions import DimensionMismatchError, EstimationError, UsageError
from app.models.circuit import BrickworkCircuit, EntanglementRecord
from app.models.gate import Gate
from app.models.state import PureState
from app.services import qinfo
from app.services.gates import kicked_ising_first_gate, kicked_ising_gate

logger = logging.getLogger(__name__)

GROWTH_SLACK = 1e-9

INITIAL_KINDS = ("product", "dimer", "vector", "kicked-ising-T", "kicked-ising-L")


def _product(site_vectors: Sequence[np.ndarray], q: int) -> PureState:
    vector = np.ones(1, dtype=complex)
    for site in site_vectors:
        site = np.asarray(site, dtype=complex).reshape(-1)
        if site.size != q:
            raise DimensionMismatchError(f"Single-site state of size {site.size} for q={q}")
        vector = np.kron(vector, site / np.linalg.norm(site))
    return PureState.normalized(vector, (q,) * len(site_vectors))


def _per_site(value, L: int, name: str) -> list:
    values = list(value) if isinstance(value, (list, tuple, np.ndarray)) else [value] * L
    if len(values) != L:
        raise DimensionMismatchError(f"{name} has {len(values)} entries for L={L}")
    return values


def initial_state(kind: str, L: int, q: int, params: Optional[dict] = None) -> PureState:
    """Initial chain states.

    product         every site |0>, or params["site_states"] (one vector or L vectors)
    dimer           Bell pairs on sites (2i, 2i+1); profile ln q, 0, ln q, ...
    vector          params["amplitudes"] taken as given (normalized)
    kicked-ising-T  qubits in the xy plane, (|0> + e^{i phi}|1>)/sqrt 2, params["phi"]
    kicked-ising-L  qubits along z, params["bits"]
    """
    params = params or {}
    if L % 2 or L < 2:
        raise UsageError(f"Chain length must be even, got L={L}")
    check_capacity(q**L)

    if kind == "product":
        default = np.eye(q, dtype=complex)[0]
        sites = params.get("site_states", default)
        sites = np.asarray(sites, dtype=complex)
        sites = [sites] * L if sites.ndim == 1 else list(sites)
        if len(sites) != L:
            raise DimensionMismatchError(f"{len(sites)} site states for L={L}")
        return _product(sites, q)
    if kind == "dimer":
        pair = qinfo.bell_state(q).amplitudes
        vector = np.ones(1, dtype=complex)
        for _ in range(L // 2):
            vector = np.kron(vector, pair)
        return PureState.normalized(vector, (q,) * L)
    if kind == "vector":
        if "amplitudes" not in params:
            raise UsageError("Initial state kind 'vector' needs params['amplitudes']")
        return PureState.normalized(params["amplitudes"], (q,) * L)
    if kind in ("kicked-ising-T", "kicked-ising-L"):
        if q != 2:
            raise UsageError(f"{kind} states are qubit states, got q={q}")
        if kind == "kicked-ising-T":
            phis = _per_site(params.get("phi", 0.0), L, "phi")
            sites = [np.array([1.0, np.exp(1j * phi)]) for phi in phis]
        else:
            bits = _per_site(params.get("bits", 0), L, "bits")
            sites = [np.eye(2)[int(bit)] for bit in bits]
        return _product(sites, q)
    raise UsageError(f"Unknown initial state '{kind}' (known: {', '.join(INITIAL_KINDS)})")


def kicked_ising_circuit(L: int, J: float, b: float, h: float, first_parity: int = 0) -> BrickworkCircuit:
    """Kicked-Ising brickwork: u0 on the first layer, the bulk gate afterwards."""
    return BrickworkCircuit.uniform(
        L,
        kicked_ising_gate(J, b, h),
        first_layer_override=kicked_ising_first_gate(J, h),
        first_parity=first_parity,
    )


def bond_entropies(state: PureState) -> np.ndarray:
    """Entropy of sites [0..b] for every bond b, from Schmidt values at the cut."""
    dims = state.dims
    amplitudes = state.amplitudes
    entropies = np.empty(len(dims) - 1)
    left = 1
    for bond in range(len(dims) - 1):
        left *= dims[bond]
        singular = linalg.svdvals(amplitudes.reshape(left, -1))
        weights = singular**2
        entropies[bond] = -np.sum(xlogy(weights, weights))
    return entropies


def apply_gate(psi: np.ndarray, gate: Gate, bond: int, L: int) -> np.ndarray:
    """Apply a two-site gate on sites (bond, bond+1) of a flat state vector."""
    q = gate.q
    left = q**bond
    right = q ** (L - bond - 2)
    block = psi.reshape(left, q * q, right)
    return np.einsum("xy,ayb->axb", gate.matrix, block).reshape(-1)


def apply_layer(psi: np.ndarray, circuit: BrickworkCircuit, t: int) -> np.ndarray:
    for bond in circuit.bonds(t):
        psi = apply_gate(psi, circuit.gate_at(t, bond), bond, circuit.L)
    return psi


def light_cone_valid(L: int, t: int) -> bool:
    """Central-cut results stand for the infinite chain while 2t + 2 <= L."""
    return 2 * t + 2 <= L


def evolve(
    circuit: BrickworkCircuit,
    initial: PureState,
    T: int,
    max_amplitudes: Optional[int] = None,
) -> EntanglementRecord:
    """Run T layers and record the bond-entropy profile at t = 0..T."""
    if T < 1:
        raise UsageError(f"Number of steps must be at least 1, got T={T}")
    L, q = circuit.L, circuit.q
    check_capacity(q**L, max_amplitudes)
    if tuple(initial.dims) != (q,) * L:
        raise DimensionMismatchError(
            f"Initial state dims {initial.dims} do not match a chain of {L} sites with q={q}"
        )

    psi = initial.amplitudes.copy()
    profiles = [bond_entropies(initial)]
    bound = 2 * math.log(q) + GROWTH_SLACK
    for t in range(1, T + 1):
        psi = apply_layer(psi, circuit, t)
        state = PureState.normalized(psi, initial.dims)
        psi = state.amplitudes.copy()
        profiles.append(bond_entropies(state))
        increase = float(np.max(profiles[-1] - profiles[-2]))
        if increase > bound:
            logger.warning(
                "Layer %d raised a cut by %.12f nats, above 2 ln q", t, increase
            )
    times = list(range(T + 1))
    logger.info(
        "Evolved L=%d q=%d for %d steps; central cut entropy %.9f nats",
        L, q, T, profiles[-1][circuit.central_cut],
    )
    return EntanglementRecord(
        q=q,
        L=L,
        times=times,
        profiles=profiles,
        light_cone_valid=[light_cone_valid(L, t) for t in times],
    )


def estimate_vE(
    record: EntanglementRecord,
    cut: Optional[int] = None,
    window: Optional[Tuple[int, int]] = None,
    stride: int = 2,
) -> Tuple[float, float]:
    """Least-squares growth rate of S(cut) in units of ln q, and the max residual.

    Times are sampled from window[0] to window[1] in steps of `stride`; the
    default stride of two matches one gate crossing a given cut per two layers.
    """
    cut = record.central_cut if cut is None else cut
    start, stop = window if window is not None else (record.times[0], record.times[-1])
    wanted = list(range(start, stop + 1, stride))
    index = {t: k for k, t in enumerate(record.times)}
    missing = [t for t in wanted if t not in index]
    if missing:
        raise EstimationError(f"Times {missing} are not in the record")
    if any(not record.light_cone_valid[index[t]] for t in wanted):
        raise EstimationError("Fit window reaches past the light-cone limit 2t + 2 <= L")
    if len(wanted) < 3:
        raise EstimationError(f"Fit window has {len(wanted)} points, need at least 3")

    times = np.array(wanted, dtype=float)
    entropies = np.array([record.profiles[index[t]][cut] for t in wanted])
    slope, intercept = np.polyfit(times, entropies, 1)
    residual = float(np.max(np.abs(entropies - (slope * times + intercept))))
    return float(slope / math.log(record.q)), residual


def zigzag_check(profile: Sequence[float], q: int, tol: float = 1e-9) -> Tuple[bool, Optional[int]]:
    """Whether neighbouring bonds differ by exactly ln q with alternating sign.

    The parity is that of the valley bonds (0 even, 1 odd), reported
    whenever the profile has at least two entries.
    """
    profile = np.asarray(profile, dtype=float)
    if profile.size < 2:
        raise UsageError("A zigzag needs at least two bonds")
    steps = np.diff(profile)
    parity = 0 if steps[0] > 0 else 1
    sizes_ok = bool(np.all(np.abs(np.abs(steps) - math.log(q)) <= tol))
    signs = np.sign(steps)
    alternating = bool(np.all(signs[1:] == -signs[:-1])) and bool(np.all(signs != 0))
    return sizes_ok and alternating, parity


def valley_parity(state: PureState, q: int, tol: float = 1e-9) -> Optional[int]:
    """Parity of the valley bonds of a zigzag state, or None if it is not one."""
    is_zigzag, parity = zigzag_check(bond_entropies(state), q, tol)
    return parity if is_zigzag else None
