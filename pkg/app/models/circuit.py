from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from app.exceptions import DimensionMismatchError, UsageError
from app.models.gate import Gate


@dataclass(frozen=True)
class BrickworkCircuit:
    """Brickwork of two-site gates on an open chain of L sites.

    Layer t (1-based) acts on bonds of parity (first_parity + t - 1) % 2;
    bond b joins sites b and b+1. Gate lookup order for (t, b): the
    first-layer override, then bond_gates[(t, b)], bond_gates[(None, b)],
    layer_gates[(t, parity)], and finally parity_gates[parity].
    """

    L: int
    q: int
    parity_gates: Dict[int, Gate]
    layer_gates: Dict[Tuple[int, int], Gate] = field(default_factory=dict)
    bond_gates: Dict[Tuple[Optional[int], int], Gate] = field(default_factory=dict)
    first_layer_override: Optional[Gate] = None
    first_parity: int = 0

    def __post_init__(self):
        if self.L < 4 or self.L % 2:
            raise UsageError(f"Chain length must be even and at least 4, got L={self.L}")
        if self.first_parity not in (0, 1):
            raise UsageError(f"first_parity must be 0 or 1, got {self.first_parity}")
        if set(self.parity_gates) != {0, 1}:
            raise UsageError("parity_gates needs a gate for parity 0 and parity 1")
        gates = [
            *self.parity_gates.values(),
            *self.layer_gates.values(),
            *self.bond_gates.values(),
        ]
        if self.first_layer_override is not None:
            gates.append(self.first_layer_override)
        for gate in gates:
            if gate.q != self.q:
                raise DimensionMismatchError(
                    f"Gate with q={gate.q} in a circuit with q={self.q}"
                )

    @classmethod
    def uniform(cls, L: int, gate: Gate, **kwargs) -> "BrickworkCircuit":
        """Same gate on every bond at every step."""
        return cls(L=L, q=gate.q, parity_gates={0: gate, 1: gate}, **kwargs)

    def parity(self, t: int) -> int:
        return (self.first_parity + t - 1) % 2

    def bonds(self, t: int) -> List[int]:
        return list(range(self.parity(t), self.L - 1, 2))

    def gate_at(self, t: int, bond: int) -> Gate:
        if t == 1 and self.first_layer_override is not None:
            return self.first_layer_override
        for key in ((t, bond), (None, bond)):
            if key in self.bond_gates:
                return self.bond_gates[key]
        parity = self.parity(t)
        return self.layer_gates.get((t, parity), self.parity_gates[parity])

    @property
    def central_cut(self) -> int:
        return self.L // 2 - 1

    def __repr__(self):
        return f"<BrickworkCircuit L={self.L} q={self.q} first_parity={self.first_parity}>"


@dataclass(frozen=True)
class EntanglementRecord:
    """Bond-entropy profiles (nats) of a chain at successive time steps."""

    q: int
    L: int
    times: List[int]
    profiles: List[np.ndarray]
    light_cone_valid: List[bool]

    def __post_init__(self):
        if not (len(self.times) == len(self.profiles) == len(self.light_cone_valid)):
            raise DimensionMismatchError("Record columns have different lengths")
        for profile in self.profiles:
            if len(profile) != self.L - 1:
                raise DimensionMismatchError(
                    f"Profile of length {len(profile)} for a chain of {self.L} sites"
                )

    @property
    def central_cut(self) -> int:
        return self.L // 2 - 1

    def series(self, cut: int) -> np.ndarray:
        """Entropy at one cut across all recorded times."""
        return np.array([profile[cut] for profile in self.profiles])

    def layer_increases(self) -> np.ndarray:
        """Per-layer, per-cut entropy increase S_t - S_{t-1}."""
        stacked = np.array(self.profiles)
        return np.diff(stacked, axis=0)

    def __repr__(self):
        return f"<EntanglementRecord L={self.L} q={self.q} steps={len(self.times) - 1}>"
