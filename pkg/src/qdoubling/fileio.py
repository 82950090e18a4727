"""On-disk formats: JSON matrices and permutations, manifests, history CSVs.

Matrices are stored as ``{"rows", "cols", "re", "im"}`` with row-major real
and imaginary parts; permutations as ``{"size", "image"}`` with 0-based
indices.  All writes go through a temp file and an atomic rename.
"""

from __future__ import annotations

import csv
import json
import os
from pathlib import Path
from typing import Iterable

import numpy as np

from .driver import IterationRecord
from .linalg import Permutation, as_complex_matrix

HISTORY_HEADER = ["i", "absUpdateX", "relUpdateX", "normE", "normF", "normX",
                  "normY", "wCondition", "wMinPivot", "guardActions"]


def _atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def matrix_to_obj(a: np.ndarray) -> dict:
    a = as_complex_matrix(a)
    if not np.isfinite(a).all():
        raise ValueError("refusing to serialize non-finite matrix entries")
    return {
        "rows": int(a.shape[0]),
        "cols": int(a.shape[1]),
        "re": a.real.ravel().tolist(),
        "im": a.imag.ravel().tolist(),
    }


def obj_to_matrix(obj: dict) -> np.ndarray:
    rows, cols = int(obj["rows"]), int(obj["cols"])
    re = np.asarray(obj["re"], dtype=np.float64)
    im = np.asarray(obj["im"], dtype=np.float64)
    if re.size != rows * cols or im.size != rows * cols:
        raise ValueError(f"matrix payload length {re.size}/{im.size} does not "
                         f"match {rows}x{cols}")
    a = (re + 1j * im).reshape(rows, cols)
    if not np.isfinite(a).all():
        raise ValueError("matrix file contains non-finite entries")
    return a


def write_matrix(path: str | Path, a: np.ndarray) -> None:
    _atomic_write_text(Path(path), json.dumps(matrix_to_obj(a)))


def read_matrix(path: str | Path) -> np.ndarray:
    return obj_to_matrix(json.loads(Path(path).read_text()))


def write_permutation(path: str | Path, p: Permutation) -> None:
    obj = {"size": int(p.n), "image": [int(k) for k in p.image]}
    _atomic_write_text(Path(path), json.dumps(obj))


def read_permutation(path: str | Path) -> Permutation:
    obj = json.loads(Path(path).read_text())
    image = np.asarray(obj["image"], dtype=np.intp)
    if image.size != int(obj["size"]):
        raise ValueError("permutation size does not match its image length")
    return Permutation(image)


def write_manifest(path: str | Path, manifest: dict) -> None:
    _atomic_write_text(Path(path), json.dumps(manifest, indent=2, sort_keys=True))


def read_manifest(path: str | Path) -> dict:
    return json.loads(Path(path).read_text())


def write_history_csv(path: str | Path, history: Iterable[IterationRecord]) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(HISTORY_HEADER)
        for rec in history:
            writer.writerow([
                rec.index,
                repr(rec.abs_update_x), repr(rec.rel_update_x),
                repr(rec.norm_e), repr(rec.norm_f),
                repr(rec.norm_x), repr(rec.norm_y),
                repr(rec.w_condition), repr(rec.w_min_pivot),
                len(rec.guard_events.actions),
            ])
    os.replace(tmp, path)


def history_to_json(history: Iterable[IterationRecord]) -> list[dict]:
    out = []
    for rec in history:
        out.append({
            "i": rec.index,
            "absUpdateX": rec.abs_update_x,
            "relUpdateX": rec.rel_update_x,
            "normE": rec.norm_e, "normF": rec.norm_f,
            "normX": rec.norm_x, "normY": rec.norm_y,
            "wCondition": rec.w_condition, "wMinPivot": rec.w_min_pivot,
            "guardActions": [
                {"kind": a.kind, "pivot": list(a.pivot) if a.pivot else None,
                 "maxBefore": a.max_before, "maxAfter": a.max_after}
                for a in rec.guard_events.actions
            ],
        })
    return out
