"""JSON sequence/family formats, key=value config files and CSV output."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from qampmepr.errors import ArgumentError, FormatError
from qampmepr.qammap import QamMatrix
from qampmepr.seqcore import ComplexSequence, QuaternarySequence
from qampmepr.setbuilder import SequenceFamily


def quaternary_to_json(q: QuaternarySequence) -> dict:
    return {"type": "quaternary", "n": len(q), "values": list(q.values)}


def complex_to_json(a: ComplexSequence | np.ndarray) -> dict:
    vals = a.values if isinstance(a, ComplexSequence) else np.asarray(a)
    return {"type": "complex", "n": int(vals.size), "values": [[float(v.real), float(v.imag)] for v in vals]}


def qam_matrix_to_json(m: QamMatrix) -> dict:
    return {"n": m.n, "N": m.N, "rows": [list(r.values) for r in m.rows]}


def family_to_json(f: SequenceFamily) -> dict:
    return {"N": f.N, "level": f.level, "threshold": f.threshold, "members": f.members.tolist()}


def read_json(path: str | Path) -> Any:
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def write_json(obj: Any, path: str | Path | None) -> str:
    text = json.dumps(obj, indent=1) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def sequence_from_json(obj: Any, where: str = "input") -> QuaternarySequence | ComplexSequence:
    if not isinstance(obj, dict) or "values" not in obj:
        raise FormatError(f"{where}: expected an object with 'type' and 'values'")
    kind = obj.get("type", "quaternary")
    values = obj["values"]
    try:
        if kind == "quaternary":
            seq: QuaternarySequence | ComplexSequence = QuaternarySequence(values)
        elif kind == "complex":
            seq = ComplexSequence([complex(re, im) for re, im in values])
        else:
            raise FormatError(f"{where}: unknown sequence type {kind!r}")
    except (TypeError, ValueError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"{where}: malformed values: {exc}") from exc
    if "n" in obj and obj["n"] != len(seq):
        raise FormatError(f"{where}: declared n={obj['n']} but {len(seq)} values given")
    return seq


def load_sequences(path: str | Path) -> list[QuaternarySequence | ComplexSequence]:
    """A file holds one sequence object or a JSON array of them.

    Records written by ``golay gen`` contribute both their sequence and companion.
    """
    data = read_json(path)
    if isinstance(data, dict) and "sequences" in data:
        data = data["sequences"]
    items = data if isinstance(data, list) else [data]
    out = []
    for k, item in enumerate(items):
        if isinstance(item, dict) and "sequence" in item:
            out.append(sequence_from_json(item["sequence"], f"{path}[{k}].sequence"))
            if "companion" in item:
                out.append(sequence_from_json(item["companion"], f"{path}[{k}].companion"))
        else:
            out.append(sequence_from_json(item, f"{path}[{k}]"))
    return out


def load_qam_matrix(path: str | Path) -> QamMatrix:
    data = read_json(path)
    try:
        m = QamMatrix(data["rows"])
    except (KeyError, TypeError) as exc:
        raise FormatError(f"{path}: expected {{'n', 'N', 'rows'}}") from exc
    if data.get("n", m.n) != m.n or data.get("N", m.N) != m.N:
        raise FormatError(f"{path}: declared shape does not match rows")
    return m


def load_families(path: str | Path) -> list[SequenceFamily]:
    data = read_json(path)
    items = data if isinstance(data, list) else [data]
    out = []
    for k, item in enumerate(items):
        try:
            members = np.array(item["members"], dtype=np.int64).reshape(-1, int(item["N"]))
            if np.any((members < 0) | (members > 3)):
                raise FormatError(f"{path}[{k}]: members must have entries in 0..3")
            f = SequenceFamily(members.astype(np.int8), int(item.get("level", k)), float(item["threshold"]), False)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, FormatError):
                raise
            raise FormatError(f"{path}[{k}]: malformed family: {exc}") from exc
        f.closed = f.is_phase_closed()
        out.append(f)
    return out


_BOOL = {"1": True, "true": True, "on": True, "yes": True, "0": False, "false": False, "off": False, "no": False}


def parse_config(path: str | Path) -> dict[str, Any]:
    """Read ``key = value`` lines; ``#`` starts a comment."""
    out: dict[str, Any] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        try:
            if key in ("f0", "delta_f", "T"):
                out[key] = float(value)
            elif key in ("oversampling", "seed", "enumeration_cap", "materialization_cap"):
                out[key] = int(value)
            elif key == "refine":
                out[key] = _BOOL[value.lower()]
            elif key == "output_format":
                if value not in ("json", "csv", "text"):
                    raise ValueError(value)
                out[key] = value
            else:
                raise FormatError(f"{path}:{lineno}: unknown key {key!r}")
        except (ValueError, KeyError) as exc:
            raise FormatError(f"{path}:{lineno}: bad value for {key}: {value!r}") from exc
    return out


def format_csv(rows: Iterable[dict], columns: list[str], header: str | None = None) -> str:
    buf = io.StringIO()
    if header:
        buf.write(f"# {header}\n")
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def require_quaternary(seq, where: str) -> QuaternarySequence:
    if not isinstance(seq, QuaternarySequence):
        raise ArgumentError(f"{where}: a quaternary sequence is required")
    return seq
