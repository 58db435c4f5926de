"""Serialization of transition models, merge tables and experiment reports.

Models are JSON with sparse ``[i, j, value]`` triplets; floats are written with
``repr`` so every probability round-trips exactly. Merge tables are tab-separated
text behind a ``#arplab-merges v1 <kind>`` header.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence

import numpy as np
import scipy.sparse

from .encoding import MergeRule, MergeTable
from .errors import ArpLabError, SchemaError, TypeMismatch
from .markov import TransitionModel, Vocabulary

MODEL_VERSION = 1
MERGES_HEADER = "#arplab-merges v1"
ZETA_TOL = 1e-12


# ---------------------------------------------------------------------------
# JSON helpers
# ---------------------------------------------------------------------------
def to_jsonable(value: Any) -> Any:
    """Plain JSON types; NaN and infinities become ``None``."""
    if isinstance(value, Mapping):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def dumps_json(obj: Any) -> str:
    return json.dumps(to_jsonable(obj), indent=2, allow_nan=False) + "\n"


def dumps_csv(rows: Sequence[Mapping[str, Any]], fieldnames: Optional[Sequence[str]] = None) -> str:
    if fieldnames is None:
        fieldnames = list(rows[0].keys()) if rows else []
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=list(fieldnames), lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _csv_cell(row.get(k)) for k in fieldnames})
    return buffer.getvalue()


def _csv_cell(value: Any) -> Any:
    value = to_jsonable(value)
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return value


def _write_text(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="\n")


def write_json(path: Path, obj: Any) -> None:
    _write_text(path, dumps_json(obj))


def write_csv(path: Path, rows: Sequence[Mapping[str, Any]], fieldnames: Optional[Sequence[str]] = None) -> None:
    _write_text(path, dumps_csv(rows, fieldnames))


# ---------------------------------------------------------------------------
# Models
# ---------------------------------------------------------------------------
def _triplets(matrix) -> List[List[Any]]:
    coo = scipy.sparse.coo_matrix(matrix)
    order = np.lexsort((coo.col, coo.row))
    return [[int(coo.row[k]), int(coo.col[k]), coo.data[k].item()] for k in order]


def model_to_dict(model: TransitionModel) -> Dict[str, Any]:
    return {
        "version": MODEL_VERSION,
        "vocab": list(model.vocab.tokens),
        "zeta": model.zeta,
        "b": [float(x) for x in model.b],
        "B": _triplets(model.B),
        "counts": _triplets(model.counts),
    }


def save_model(model: TransitionModel, path: Path) -> None:
    write_json(path, model_to_dict(model))


def _from_triplets(rows: Iterable, shape, dtype, name: str) -> np.ndarray:
    out = np.zeros(shape, dtype=dtype)
    for entry in rows:
        if not isinstance(entry, list) or len(entry) != 3:
            raise SchemaError(f"{name}: expected [i, j, value] triplets, got {entry!r}")
        i, j, value = entry
        if not (isinstance(i, int) and isinstance(j, int)) or not (0 <= i < shape[0] and 0 <= j < shape[1]):
            raise SchemaError(f"{name}: index ({i}, {j}) outside shape {shape}")
        out[i, j] = value
    return out


def model_from_dict(data: Mapping[str, Any]) -> TransitionModel:
    if not isinstance(data, Mapping):
        raise SchemaError("model file must hold a JSON object")
    if data.get("version") != MODEL_VERSION:
        raise SchemaError(f"unsupported model version {data.get('version')!r}")
    missing = [key for key in ("vocab", "zeta", "b", "B") if key not in data]
    if missing:
        raise SchemaError(f"model file lacks {', '.join(missing)}")
    tokens = data["vocab"]
    if not isinstance(tokens, list) or not tokens:
        raise SchemaError("model vocabulary is empty")
    n = len(tokens)
    b = data["b"]
    if not isinstance(b, list) or len(b) != n:
        raise SchemaError(f"b has {len(b) if isinstance(b, list) else '?'} entries, vocabulary has {n}")
    B = _from_triplets(data["B"], (n, n), np.float64, "B")
    counts = scipy.sparse.csr_matrix(_from_triplets(data.get("counts", []), (n, n + 1), np.int64, "counts"))
    try:
        model = TransitionModel.from_arrays(Vocabulary(tuple(tokens)), B, b, counts)
    except (ArpLabError, ValueError) as exc:
        raise SchemaError(f"invalid model: {exc}") from exc
    if abs(model.zeta - float(data["zeta"])) > ZETA_TOL:
        raise SchemaError(f"stored zeta {data['zeta']!r} disagrees with B (zeta = {model.zeta!r})")
    return model


def load_model(path: Path) -> TransitionModel:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not JSON ({exc})") from exc
    return model_from_dict(data)


# ---------------------------------------------------------------------------
# Merge tables
# ---------------------------------------------------------------------------
def dumps_merges(table: MergeTable) -> str:
    lines = [f"{MERGES_HEADER} {table.kind}"]
    lines.extend(f"{rule.left}\t{rule.right}\t{rule.step}" for rule in table)
    return "\n".join(lines) + "\n"


def save_merges(table: MergeTable, path: Path) -> None:
    _write_text(path, dumps_merges(table))


def loads_merges(text: str, expected_kind: Optional[str] = None) -> MergeTable:
    lines = text.splitlines()
    if not lines or not lines[0].startswith(MERGES_HEADER + " "):
        raise SchemaError(f"missing '{MERGES_HEADER} <bpe|re>' header")
    kind = lines[0][len(MERGES_HEADER) + 1 :].strip()
    if kind not in ("bpe", "re"):
        raise SchemaError(f"unknown merge table kind {kind!r}")
    if expected_kind is not None and kind != expected_kind:
        raise TypeMismatch(f"expected a {expected_kind} merge table, found {kind}")
    table = MergeTable(kind)
    for number, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise SchemaError(f"line {number}: expected left<TAB>right<TAB>step")
        left, right, step = parts
        try:
            table.add(MergeRule(left, right, int(step), kind))
        except ValueError as exc:
            raise SchemaError(f"line {number}: {exc}") from exc
    return table


def load_merges(path: Path, expected_kind: Optional[str] = None) -> MergeTable:
    return loads_merges(Path(path).read_text(encoding="utf-8"), expected_kind)


__all__ = [
    "MODEL_VERSION",
    "MERGES_HEADER",
    "to_jsonable",
    "dumps_json",
    "dumps_csv",
    "write_json",
    "write_csv",
    "model_to_dict",
    "model_from_dict",
    "save_model",
    "load_model",
    "dumps_merges",
    "loads_merges",
    "save_merges",
    "load_merges",
]
