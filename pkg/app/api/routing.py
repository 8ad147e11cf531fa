"""Subcommand registration. A router collects handlers whose parameters are
pydantic models; main turns each model into command-line flags."""
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Type

from app.exceptions import UsageError
from app.models.gate import Gate
from app.schemas.config import AcceptanceCheck, CommandParams
from app.services import file_storage
from app.services.gates import haar_gate


@dataclass
class RunContext:
    seed: Optional[int]
    workers: Optional[int]
    tolerances: Dict[str, float]
    wants_csv: bool = False

    def tolerance(self, name: str) -> float:
        return self.tolerances[name]


@dataclass
class CommandResult:
    result: Dict[str, Any]
    checks: List[AcceptanceCheck] = field(default_factory=list)
    csv: Optional[str] = None
    # entropies in nats, echoed to stderr in the requested units
    summary: Dict[str, float] = field(default_factory=dict)


Handler = Callable[[CommandParams, RunContext], CommandResult]


@dataclass
class Command:
    name: str
    handler: Handler
    params: Type[CommandParams]
    help: str
    tolerances: Dict[str, float]
    stochastic: bool = False
    csv: bool = False


class CommandRouter:
    """Collects subcommands registered with the `command` decorator."""

    def __init__(self):
        self.commands: List[Command] = []

    def command(
        self,
        name: str,
        params: Type[CommandParams],
        tolerances: Optional[Dict[str, float]] = None,
        stochastic: bool = False,
        csv: bool = False,
    ):
        def register(handler: Handler) -> Handler:
            self.commands.append(
                Command(
                    name=name,
                    handler=handler,
                    params=params,
                    help=(handler.__doc__ or "").strip().split("\n")[0],
                    tolerances=dict(tolerances or {}),
                    stochastic=stochastic,
                    csv=csv,
                )
            )
            return handler

        return register


class GateParams(CommandParams):
    """Gate selection shared by the gate commands."""

    gate: str = "swap"
    q: int = 2
    J: float = math.pi / 4
    b: float = math.pi / 4
    h: float = 0.0


def resolve_gate(params: GateParams, seed: Optional[int] = None) -> Gate:
    """Named gate, gate file, or "haar" drawn from the seed."""
    if params.gate == "haar":
        if seed is None:
            raise UsageError("--gate haar needs --seed")
        return haar_gate(params.q, seed)
    kicked = params.gate.startswith("kicked-ising")
    extra = {"J": params.J, "b": params.b, "h": params.h} if kicked else {}
    return file_storage.load_gate(params.gate, params.q, extra)
