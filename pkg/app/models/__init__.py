from app.models.state import Bipartition, DensityMatrix, PureState
from app.models.gate import CartanData, Gate
from app.models.circuit import BrickworkCircuit, EntanglementRecord
from app.models.mps import MPSPair

__all__ = [
    "Bipartition",
    "BrickworkCircuit",
    "CartanData",
    "DensityMatrix",
    "EntanglementRecord",
    "Gate",
    "MPSPair",
    "PureState",
]
