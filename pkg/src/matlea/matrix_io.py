"""JSON matrix format: ``{"dim": d, "data": [[re, im], ...]}`` in row-major order."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .hermitian import hermitian


def matrix_to_json(A: np.ndarray) -> dict:
    A = np.asarray(A, dtype=np.complex128)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    flat = A.reshape(-1)
    return {"dim": int(A.shape[0]), "data": [[float(z.real), float(z.imag)] for z in flat]}


def matrix_from_json(obj: dict, check_hermitian: bool = True) -> np.ndarray:
    d = int(obj["dim"])
    data = np.asarray(obj["data"], dtype=float)
    if data.shape != (d * d, 2):
        raise ValueError(f"expected {d * d} (re, im) pairs, got array of shape {data.shape}")
    A = (data[:, 0] + 1j * data[:, 1]).reshape(d, d)
    return hermitian(A) if check_hermitian else A


def dump_matrix(path: str | Path, A: np.ndarray, **extra) -> None:
    obj = matrix_to_json(A)
    obj.update(extra)
    Path(path).write_text(json.dumps(obj, indent=1) + "\n")


def load_matrix(path: str | Path, check_hermitian: bool = True) -> np.ndarray:
    return matrix_from_json(json.loads(Path(path).read_text()), check_hermitian)
