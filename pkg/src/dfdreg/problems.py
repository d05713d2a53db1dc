"""Named model problems and the decompositions shipped with the package."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .dfd import DiagonalFrameDecomposition, derive_dfd_from_range_frame, dfd_example_hp, dfd_from_svd
from .formats import load_dfd, read_frame, read_matrix
from .frames import Frame
from .operators import (
    LinearOperator,
    identity_operator,
    make_hp_operator,
    make_volterra_operator,
    svd_decompose,
)

PROBLEMS = ("hp", "hp_unbounded", "volterra", "identity", "files")
DFD_SOURCES = ("svd", "example_hp", "derive", "stored")


def volterra_singular_values(N: int) -> np.ndarray:
    return np.linalg.svd(make_volterra_operator(N).to_dense(), compute_uv=False)


def _svd_kappa_family(problem: str):
    if problem in ("hp", "hp_unbounded"):
        return lambda n: 1.0 / np.sqrt(np.arange(1, n + 1))
    if problem == "volterra":
        return volterra_singular_values
    if problem == "identity":
        return np.ones
    return None


def build_operator(problem: str, N: int | None = None, path=None) -> LinearOperator:
    if problem in ("hp", "hp_unbounded"):
        return make_hp_operator(N)
    if problem == "volterra":
        return make_volterra_operator(N)
    if problem == "identity":
        return identity_operator(N)
    if problem == "files":
        p = Path(path)
        A = read_matrix(p / "operator.txt" if p.is_dir() else p)
        return LinearOperator(A.shape, matrix=A, name=f"files:{p.name}")
    raise ValueError(f"unknown problem {problem!r}; expected one of {', '.join(PROBLEMS)}")


def build_dfd(
    problem: str,
    N: int | None = None,
    dfd: str = "svd",
    path=None,
    v_path=None,
) -> DiagonalFrameDecomposition:
    """Decomposition ``dfd`` of the named problem.

    ``example_hp`` is only defined for the diagonal ``hp`` operator; the
    ``hp_unbounded`` problem selects its unbounded-kappa variant.  ``stored``
    loads a directory written by :func:`dfdreg.formats.save_dfd`.
    """
    if problem not in PROBLEMS:
        raise ValueError(f"unknown problem {problem!r}; expected one of {', '.join(PROBLEMS)}")
    if problem != "files" and (N is None or int(N) < 1):
        raise ValueError(f"problem {problem} needs a positive size N")
    if dfd == "example_hp":
        if problem not in ("hp", "hp_unbounded"):
            raise ValueError("the example_hp decomposition exists only for the hp operator")
        return dfd_example_hp(N, "unbounded_kappa" if problem == "hp_unbounded" else "standard")
    if dfd == "stored":
        if problem != "files":
            raise ValueError("stored decompositions are read with problem = files")
        return load_dfd(path)
    op = build_operator(problem, N, path)
    if dfd == "svd":
        return dfd_from_svd(svd_decompose(op), op, f"{problem}:svd", _svd_kappa_family(problem))
    if dfd == "derive":
        if v_path is None:
            raise ValueError("the derive decomposition needs v_path (a frame file)")
        return derive_dfd_from_range_frame(op, read_frame(v_path), name=f"{problem}:derived")[0]
    raise ValueError(f"unknown decomposition source {dfd!r}; expected one of {', '.join(DFD_SOURCES)}")


def redundant_range_frame(op: LinearOperator) -> Frame:
    """Frame of ``ran K``: the left singular vectors followed by normalized pairwise sums.

    Gives an overcomplete, non-tight ``v`` for the derived decomposition.
    """
    V = svd_decompose(op).v
    S = (V[:-1] + V[1:]) / np.sqrt(2.0)
    labels = [f"s{i}" for i in range(len(V))] + [f"p{i}" for i in range(len(S))]
    return Frame(tuple(labels), np.vstack([V, S]))


def shipped_dfds(hp_n: int = 50, volterra_n: int = 32) -> dict[str, DiagonalFrameDecomposition]:
    """The decompositions the package's guarantees are stated for."""
    hp = make_hp_operator(hp_n)
    vol = make_volterra_operator(volterra_n)
    return {
        "hp:svd": build_dfd("hp", hp_n, "svd"),
        "hp:example_hp": dfd_example_hp(hp_n, "standard"),
        "hp:example_hp_unbounded": dfd_example_hp(hp_n, "unbounded_kappa"),
        "hp:derived": derive_dfd_from_range_frame(hp, redundant_range_frame(hp), name="hp:derived")[0],
        "volterra:svd": build_dfd("volterra", volterra_n, "svd"),
        "volterra:derived": derive_dfd_from_range_frame(vol, redundant_range_frame(vol), name="volterra:derived")[0],
    }
