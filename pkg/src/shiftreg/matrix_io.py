"""Plain-text matrix exchange format.

::

    m n field
    a11 a12 ... a1n
    ...
    am1 am2 ... amn

``field`` is ``real`` or ``complex``; complex entries are written like
``1.5-2j`` with no inner spaces.  A vector is an ``m x 1`` matrix.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

__all__ = ["read_matrix", "write_matrix", "read_vector", "write_vector", "write_problem"]


def _format(z, is_complex: bool) -> str:
    if is_complex:
        return f"{z.real:.17g}{z.imag:+.17g}j"
    return f"{z:.17g}"


def write_matrix(path, M) -> None:
    M = np.asarray(M)
    if M.ndim == 1:
        M = M[:, None]
    if M.ndim != 2:
        raise ValueError("only 1-D and 2-D arrays can be written")
    if not np.all(np.isfinite(M)):
        raise ValueError("non-finite entries cannot be written")
    is_complex = np.iscomplexobj(M)
    lines = [f"{M.shape[0]} {M.shape[1]} {'complex' if is_complex else 'real'}"]
    lines += [" ".join(_format(z, is_complex) for z in row) for row in M]
    Path(path).write_text("\n".join(lines) + "\n")


def read_matrix(path) -> np.ndarray:
    text = Path(path).read_text().split("\n")
    rows = [ln.split() for ln in text if ln.strip()]
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = rows[0]
    if len(header) != 3 or header[2] not in ("real", "complex"):
        raise ValueError(f"{path}: bad header {' '.join(header)!r}")
    try:
        m, n = int(header[0]), int(header[1])
    except ValueError:
        raise ValueError(f"{path}: bad dimensions in header") from None
    if m < 1 or n < 1:
        raise ValueError(f"{path}: dimensions must be positive")
    body = rows[1:]
    if len(body) != m or any(len(r) != n for r in body):
        raise ValueError(f"{path}: expected {m} rows of {n} entries")
    conv = complex if header[2] == "complex" else float
    try:
        M = np.array([[conv(tok) for tok in r] for r in body])
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{path}: non-finite entry")
    return M


def read_vector(path) -> np.ndarray:
    M = read_matrix(path)
    if M.shape[1] != 1:
        raise ValueError(f"{path}: a vector file must have one column, found {M.shape[1]}")
    return M[:, 0]


write_vector = write_matrix


def write_problem(prefix, problem, delta: float | None = None) -> dict:
    """Write ``<prefix>_A.txt``, ``<prefix>_f.txt`` and the ``<prefix>.json`` sidecar."""
    prefix = Path(prefix)
    write_matrix(f"{prefix}_A.txt", problem.A.entries)
    write_vector(f"{prefix}_f.txt", problem.f)
    m, n = problem.A.shape
    meta = {"label": problem.label, "m": m, "n": n, "delta": delta}
    Path(f"{prefix}.json").write_text(json.dumps(meta, indent=2) + "\n")
    return meta
