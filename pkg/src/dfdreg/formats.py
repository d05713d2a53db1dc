"""Plain-text file formats for frames, matrices, vectors, decompositions and rate tables.

Every format starts with a ``# <kind> key=value ...`` header line.  Other
lines starting with ``#`` are comments and may precede the header; writers use
them for provenance.  Floats are written with 17 significant digits so that
values round-trip exactly.
"""

from __future__ import annotations

import os
import re
from pathlib import Path
from typing import Iterable

import numpy as np

from .dfd import DiagonalFrameDecomposition
from .frames import Frame, canonical_dual
from .operators import LinearOperator, coimage_basis

FLOAT_FMT = "%.17g"
_HEADER = re.compile(r"^#\s*(frame|matrix|vector)\b(.*)$")


class FormatError(ValueError):
    pass


def _fmt(x: float) -> str:
    return FLOAT_FMT % x


def _comment_block(comments: Iterable[str] | None) -> str:
    if not comments:
        return ""
    return "".join(f"# {line}\n" if line else "#\n" for line in comments)


def _read(path, kind: str) -> tuple[dict[str, int], list[str], int]:
    lines = Path(path).read_text().splitlines()
    for i, line in enumerate(lines):
        m = _HEADER.match(line)
        if m:
            if m.group(1) != kind:
                raise FormatError(f"{path}: expected a {kind} file, found {m.group(1)}")
            try:
                fields = {k: int(v) for k, v in (p.split("=", 1) for p in m.group(2).split())}
            except ValueError as exc:
                raise FormatError(f"{path}:{i + 1}: malformed header {line!r}") from exc
            body = [(j, s) for j, s in enumerate(lines[i + 1 :], i + 2) if s.strip() and not s.startswith("#")]
            return fields, body, i
        if line.strip() and not line.startswith("#"):
            break
    raise FormatError(f"{path}: missing '# {kind} ...' header")


def _floats(path, lineno: int, text: str, n: int) -> list[float]:
    parts = text.split()
    if len(parts) != n:
        raise FormatError(f"{path}:{lineno}: expected {n} values, found {len(parts)}")
    try:
        return [float(p) for p in parts]
    except ValueError as exc:
        raise FormatError(f"{path}:{lineno}: {exc}") from exc


def write_frame(path, frame: Frame, comments=None) -> None:
    out = [_comment_block(comments), f"# frame ambient_dim={frame.dim} count={frame.count}\n"]
    for label, row in zip(frame.labels, frame.vectors):
        out.append(label + "\t" + " ".join(_fmt(x) for x in row) + "\n")
    Path(path).write_text("".join(out))


def read_frame(path) -> Frame:
    fields, body, _ = _read(path, "frame")
    try:
        N, L = fields["ambient_dim"], fields["count"]
    except KeyError as exc:
        raise FormatError(f"{path}: frame header needs ambient_dim and count") from exc
    if len(body) != L:
        raise FormatError(f"{path}: header announces {L} elements, found {len(body)}")
    labels, rows = [], []
    for lineno, line in body:
        if "\t" not in line:
            raise FormatError(f"{path}:{lineno}: expected 'label<TAB>values'")
        label, values = line.split("\t", 1)
        labels.append(label.strip())
        rows.append(_floats(path, lineno, values, N))
    return Frame(tuple(labels), np.array(rows).reshape(L, N))


def write_matrix(path, A, comments=None) -> None:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    out = [_comment_block(comments), f"# matrix rows={A.shape[0]} cols={A.shape[1]}\n"]
    out.extend(" ".join(_fmt(x) for x in row) + "\n" for row in A)
    Path(path).write_text("".join(out))


def read_matrix(path) -> np.ndarray:
    fields, body, _ = _read(path, "matrix")
    try:
        R, C = fields["rows"], fields["cols"]
    except KeyError as exc:
        raise FormatError(f"{path}: matrix header needs rows and cols") from exc
    if len(body) != R:
        raise FormatError(f"{path}: header announces {R} rows, found {len(body)}")
    return np.array([_floats(path, n, line, C) for n, line in body]).reshape(R, C)


def write_vector(path, x, comments=None) -> None:
    x = np.asarray(x, dtype=float).ravel()
    out = [_comment_block(comments), f"# vector dim={x.size}\n"]
    out.extend(_fmt(v) + "\n" for v in x)
    Path(path).write_text("".join(out))


def read_vector(path) -> np.ndarray:
    fields, body, _ = _read(path, "vector")
    if "dim" not in fields:
        raise FormatError(f"{path}: vector header needs dim")
    if len(body) != fields["dim"]:
        raise FormatError(f"{path}: header announces {fields['dim']} values, found {len(body)}")
    return np.array([_floats(path, n, line, 1)[0] for n, line in body])


def write_kappa(path, kappa, comments=None) -> None:
    Path(path).write_text(_comment_block(comments) + "".join(_fmt(k) + "\n" for k in kappa))


def read_kappa(path) -> np.ndarray:
    vals = []
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        if line.strip() and not line.startswith("#"):
            vals.append(_floats(path, n, line, 1)[0])
    return np.array(vals)


DFD_FILES = ("u.frame", "v.frame", "u_dual.frame", "kappa.txt", "operator.txt")


def save_dfd(directory, dfd: DiagonalFrameDecomposition, comments=None) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_frame(d / "u.frame", dfd.u, comments)
    write_frame(d / "v.frame", dfd.v, comments)
    write_frame(d / "u_dual.frame", dfd.u_dual, comments)
    write_kappa(d / "kappa.txt", dfd.kappa, comments)
    write_matrix(d / "operator.txt", dfd.operator.to_dense(), comments)


def load_dfd(directory, name: str | None = None) -> DiagonalFrameDecomposition:
    """Load a stored decomposition; ``u_dual.frame`` is optional (canonical dual otherwise)."""
    d = Path(directory)
    missing = [f for f in ("u.frame", "v.frame", "kappa.txt", "operator.txt") if not (d / f).exists()]
    if missing:
        raise FormatError(f"{d}: missing {', '.join(missing)}")
    A = read_matrix(d / "operator.txt")
    op = LinearOperator(A.shape, matrix=A, name=os.path.basename(str(d).rstrip("/")) or "files")
    u = read_frame(d / "u.frame")
    v = read_frame(d / "v.frame")
    kappa = read_kappa(d / "kappa.txt")
    if (d / "u_dual.frame").exists():
        dual = read_frame(d / "u_dual.frame")
    else:
        dual = canonical_dual(u, coimage_basis(op))
    return DiagonalFrameDecomposition(u, v, kappa, dual, op, name or f"files:{d}", op.shape[1])


RATES_HEADER = "delta,alpha,worst_error,rate_bound"


def write_rates_csv(path, rows, comments=None) -> None:
    out = [_comment_block(comments), RATES_HEADER + "\n"]
    out.extend(",".join(_fmt(x) for x in row) + "\n" for row in np.asarray(rows, dtype=float))
    Path(path).write_text("".join(out))


def read_rates_csv(path) -> np.ndarray:
    lines = [s for s in Path(path).read_text().splitlines() if s.strip() and not s.startswith("#")]
    if not lines or lines[0] != RATES_HEADER:
        raise FormatError(f"{path}: expected header {RATES_HEADER!r}")
    return np.array([[float(x) for x in s.split(",")] for s in lines[1:]])
