"""Gate, MPS and result files. Every write goes to a temporary file first and
is moved into place once complete."""
import csv
import io
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Union

import numpy as np
from pydantic import ValidationError

from app.exceptions import DimensionMismatchError, GateFileError, NotUnitaryError, UsageError
from app.models.circuit import EntanglementRecord
from app.models.gate import UNITARY_ATOL, Gate, unitarity_defect
from app.models.mps import MPSPair
from app.schemas.mps import ComplexEntry, MPSFile
from app.services import gates
from app.services.mps import require_solvable

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

RECORD_HEADER = ("t", "bond", "entropy_nats", "light_cone_valid")


def atomic_write(path: PathLike, text: str) -> None:
    """Write UTF-8 text to path through a temporary file in the same directory."""
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    directory.mkdir(parents=True, exist_ok=True)
    handle, temporary = tempfile.mkstemp(dir=directory, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(handle, "w", encoding="utf-8", newline="") as stream:
            stream.write(text)
        os.replace(temporary, path)
    except BaseException:
        if os.path.exists(temporary):
            os.unlink(temporary)
        raise
    logger.debug("Wrote %s", path)


# ---------------------------------------------------------------------------
# Gates


def gate_to_text(gate: Gate) -> str:
    lines = [str(gate.q)]
    for row in gate.matrix:
        lines.append(" ".join(f"{float(entry.real)!r},{float(entry.imag)!r}" for entry in row))
    return "\n".join(lines) + "\n"


def save_gate(gate: Gate, path: PathLike) -> None:
    atomic_write(path, gate_to_text(gate))


def _parse_entry(token: str, path: str, line: int) -> complex:
    parts = token.split(",")
    if len(parts) != 2:
        raise GateFileError(path, line, f"entry '{token}' is not of the form re,im")
    try:
        entry = complex(float(parts[0]), float(parts[1]))
    except ValueError:
        raise GateFileError(path, line, f"entry '{token}' is not numeric")
    if not np.isfinite(entry):
        raise GateFileError(path, line, f"entry '{token}' is not finite")
    return entry


def parse_gate(text: str, path: str = "<string>") -> Gate:
    """Parse the text gate format: q on line 1, then q^2 rows of q^2 're,im' entries."""
    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise GateFileError(path, 1, "file is empty")
    try:
        q = int(lines[0].strip())
    except ValueError:
        raise GateFileError(path, 1, f"expected the integer q, got '{lines[0].strip()}'")
    if q < 1:
        raise GateFileError(path, 1, f"q must be positive, got {q}")

    size = q * q
    rows = len(lines) - 1
    if rows != size:
        # first missing row, or first extra row
        line = rows + 2 if rows < size else size + 2
        raise GateFileError(path, line, f"expected {size} matrix rows, found {rows}")
    matrix = np.empty((size, size), dtype=complex)
    for row, raw in enumerate(lines[1:]):
        line = row + 2
        tokens = raw.split(" ")
        if len(tokens) != size:
            raise GateFileError(path, line, f"expected {size} entries, found {len(tokens)}")
        matrix[row] = [_parse_entry(token, path, line) for token in tokens]

    defect = unitarity_defect(matrix)
    if defect > UNITARY_ATOL:
        raise NotUnitaryError(defect, UNITARY_ATOL)
    return Gate(q, matrix)


def load_gate_file(path: PathLike) -> Gate:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as error:
        raise UsageError(f"Cannot read gate file {path}: {error.strerror}")
    return parse_gate(text, str(path))


def load_gate(source: str, q: int = 2, params: Optional[Dict[str, float]] = None) -> Gate:
    """A named gate (identity, swap, cz, fourier, kicked-ising) or a gate file."""
    params = params or {}
    known = {*gates.NAMED_GATES, "kicked-ising", "kicked-ising-first"}
    if source in known:
        return gates.named_gate(source, q, **params)
    if not Path(source).exists():
        raise UsageError(f"'{source}' is neither a known gate name nor a file")
    gate = load_gate_file(source)
    if gate.q != q:
        raise DimensionMismatchError(f"Gate file {source} has q={gate.q}, expected q={q}")
    return gate


# ---------------------------------------------------------------------------
# MPS


def _entries(array: np.ndarray) -> list:
    return [ComplexEntry(re=float(z.real), im=float(z.imag)) for z in array.reshape(-1)]


def _array(entries: Iterable[ComplexEntry], shape) -> np.ndarray:
    return np.array([complex(e.re, e.im) for e in entries], dtype=complex).reshape(shape)


def save_mps(pair: MPSPair, path: PathLike) -> None:
    document = MPSFile(q=pair.q, chi=pair.chi, A=_entries(pair.A), B=_entries(pair.B))
    atomic_write(path, document.model_dump_json(indent=2))


def load_mps(path: PathLike, check_solvable: bool = False) -> MPSPair:
    """Read an MPS pair; with check_solvable the combined tensor must be unitary."""
    path = Path(path)
    try:
        document = MPSFile.model_validate_json(path.read_text(encoding="utf-8"))
    except OSError as error:
        raise UsageError(f"Cannot read MPS file {path}: {error.strerror}")
    except ValidationError as error:
        raise UsageError(f"Invalid MPS file {path}: {error.errors()[0]['msg']}")
    q, chi = document.q, document.chi
    pair = MPSPair(
        q=q,
        chi=chi,
        A=_array(document.A, (q, chi, chi * q)),
        B=_array(document.B, (q, chi * q, chi)),
    )
    if check_solvable:
        require_solvable(pair)
    return pair


# ---------------------------------------------------------------------------
# Results


def to_json_text(payload: Dict[str, Any]) -> str:
    return json.dumps(payload, indent=2, ensure_ascii=False, allow_nan=True) + "\n"


def record_rows(record: EntanglementRecord) -> List[Dict[str, Any]]:
    """One row per (t, bond) with the columns of RECORD_HEADER."""
    rows = []
    for t, profile, valid in zip(record.times, record.profiles, record.light_cone_valid):
        for bond, entropy in enumerate(profile):
            values = (t, bond, repr(float(entropy)), str(valid).lower())
            rows.append(dict(zip(RECORD_HEADER, values)))
    return rows


def record_to_csv(record: EntanglementRecord) -> str:
    """Plot-ready "t,bond,entropy_nats,light_cone_valid" table."""
    return rows_to_csv(record_rows(record))


def values_to_csv(values: Iterable[float]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(("index", "value"))
    for index, value in enumerate(values):
        writer.writerow((index, repr(float(value))))
    return buffer.getvalue()


def rows_to_csv(rows: Iterable[Dict[str, Any]]) -> str:
    """Generic CSV from dict rows sharing the keys of the first row."""
    rows = list(rows)
    buffer = io.StringIO()
    if not rows:
        return ""
    writer = csv.DictWriter(buffer, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buffer.getvalue()
