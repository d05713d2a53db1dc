"""Finite frames: analysis, synthesis, frame bounds and dual frames.

A frame is stored densely as an ``(L, N)`` array whose rows are the frame
elements, together with a tuple of ``L`` distinct labels (the truncated index
set).  Infinite frames are represented by finite truncations.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .rng import Xoshiro256StarStar, as_generator

#: Dense eigensolves are used up to this ambient dimension, power iteration above.
DENSE_EIG_LIMIT = 2000


class FrameError(ValueError):
    """Raised when a family fails to be a frame for the requested space."""


@dataclass(frozen=True)
class FrameBounds:
    lower: float
    upper: float
    method: str = "estimated"
    tolerance: float = 0.0

    def __post_init__(self):
        if not (0 < self.lower <= self.upper * (1 + 1e-12)):
            raise FrameError(f"invalid frame bounds A={self.lower}, B={self.upper}")
        if self.method not in ("exact", "estimated"):
            raise ValueError(f"unknown bound method {self.method!r}")

    @property
    def is_tight(self) -> bool:
        return abs(self.upper - self.lower) <= self.tolerance * self.upper


@dataclass(frozen=True)
class CoefficientSequence:
    """Real coefficients indexed by a frame's labels."""

    labels: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (len(self.labels),):
            raise ValueError(
                f"coefficient array of shape {values.shape} does not match {len(self.labels)} labels"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("coefficient sequence must be finite (l2 at finite truncation)")
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "values", values)

    def __getitem__(self, label: str) -> float:
        return float(self.values[self.labels.index(label)])

    def __len__(self):
        return len(self.labels)

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


@dataclass(frozen=True)
class Frame:
    """Finite family of vectors in R^N, one row per label."""

    labels: tuple[str, ...]
    vectors: np.ndarray
    bounds: FrameBounds | None = field(default=None, compare=False)

    def __post_init__(self):
        labels = tuple(str(lab) for lab in self.labels)
        vectors = np.array(self.vectors, dtype=float)
        if vectors.ndim != 2:
            raise ValueError("frame vectors must be a 2-D array (count, ambient_dim)")
        if len(labels) < 1 or len(labels) != vectors.shape[0]:
            raise ValueError(f"{len(labels)} labels for {vectors.shape[0]} vectors")
        if len(set(labels)) != len(labels):
            raise ValueError("frame labels must be distinct")
        if any(not lab or any(ch.isspace() for ch in lab) for lab in labels):
            raise ValueError("frame labels must be non-empty and free of whitespace")
        if not np.all(np.isfinite(vectors)):
            raise ValueError("frame vectors must be finite")
        if not np.any(vectors):
            raise FrameError("frame has no nonzero element")
        vectors.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "vectors", vectors)

    @classmethod
    def from_vectors(cls, vectors, labels: Sequence[str] | None = None, bounds=None) -> "Frame":
        vectors = np.asarray(vectors, dtype=float)
        if labels is None:
            labels = [str(i) for i in range(vectors.shape[0])]
        return cls(tuple(labels), vectors, bounds)

    @classmethod
    def standard_basis(cls, n: int) -> "Frame":
        return cls.from_vectors(np.eye(n), bounds=FrameBounds(1.0, 1.0, "exact"))

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def count(self) -> int:
        return self.vectors.shape[0]

    @property
    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.vectors, axis=1)

    def __getitem__(self, label: str) -> np.ndarray:
        return self.vectors[self.labels.index(label)]

    def with_bounds(self, bounds: FrameBounds) -> "Frame":
        return replace(self, bounds=bounds)

    def scaled(self, factor: float) -> "Frame":
        return Frame(self.labels, factor * self.vectors)


def _check_vector(frame: Frame, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[0] != frame.dim:
        raise ValueError(f"vector of dimension {x.shape[0]} for a frame in R^{frame.dim}")
    return x


def analysis(frame: Frame, x) -> CoefficientSequence:
    """Coefficients ``<x, u_lambda>`` for every frame element."""
    x = _check_vector(frame, x)
    if x.ndim != 1:
        raise ValueError("analysis expects a single vector; use frame.vectors @ X for batches")
    return CoefficientSequence(frame.labels, frame.vectors @ x)


def synthesis(frame: Frame, c) -> np.ndarray:
    """``sum_lambda c_lambda u_lambda``; adjoint of :func:`analysis`."""
    if isinstance(c, CoefficientSequence):
        if c.labels != frame.labels:
            raise ValueError("coefficient sequence is indexed by a different label set")
        values = c.values
    else:
        values = np.asarray(c, dtype=float)
        if values.shape[0] != frame.count:
            raise ValueError(f"{values.shape[0]} coefficients for a frame with {frame.count} elements")
    return frame.vectors.T @ values


def frame_operator_apply(frame: Frame, x) -> np.ndarray:
    x = _check_vector(frame, x)
    return frame.vectors.T @ (frame.vectors @ x)


def frame_operator(frame: Frame) -> np.ndarray:
    """Dense frame operator ``S = sum_lambda u_lambda u_lambda^T``."""
    return frame.vectors.T @ frame.vectors


def span_basis(frame: Frame, rcond: float = 1e-10) -> np.ndarray:
    """Orthonormal basis (columns) of the span of the frame elements."""
    _, s, vt = np.linalg.svd(frame.vectors, full_matrices=False)
    rank = int(np.sum(s > rcond * s[0]))
    return vt[:rank].T


def _restricted_eigvals(frame: Frame, subspace: np.ndarray | None) -> np.ndarray:
    if subspace is None:
        s = np.linalg.svd(frame.vectors, compute_uv=False)
        s = s[s > 1e-10 * s[0]]
        return np.sort(s**2)
    s = np.linalg.svd(frame.vectors @ subspace, compute_uv=False) ** 2
    # fewer elements than subspace dimensions: the missing eigenvalues are zero
    return np.sort(np.concatenate([s, np.zeros(subspace.shape[1] - s.size)]))


def _power_extremes(frame: Frame, subspace: np.ndarray | None, tolerance: float, max_iter: int = 100_000):
    # Extreme eigenvalues of Q^T S Q by power iteration and a shifted second pass.
    U = frame.vectors if subspace is None else frame.vectors @ subspace
    r = U.shape[1]
    rng = Xoshiro256StarStar(0x5EED)

    def top(apply):
        x = rng.standard_normal(r)
        x /= np.linalg.norm(x)
        lam = 0.0
        for _ in range(max_iter):
            y = apply(x)
            lam_new = float(x @ y)
            ny = np.linalg.norm(y)
            if ny == 0.0:
                return 0.0
            x = y / ny
            if abs(lam_new - lam) <= 0.1 * tolerance * max(abs(lam_new), 1e-300):
                return lam_new
            lam = lam_new
        return lam

    b = top(lambda x: U.T @ (U @ x))
    c = top(lambda x: b * x - U.T @ (U @ x))
    return b - c, b


def estimate_frame_bounds(
    frame: Frame,
    subspace: np.ndarray | None = None,
    tolerance: float = 1e-10,
    method: str = "auto",
) -> FrameBounds:
    """Optimal frame bounds of ``frame`` on its span or on ``subspace``.

    Parameters
    ----------
    frame : Frame
    subspace : ndarray, optional
        ``(N, r)`` matrix with orthonormal columns spanning the space the frame
        is supposed to frame, e.g. ``ker(K)^perp``.  Defaults to the span of
        the frame elements.
    tolerance : float
        Relative accuracy; also the threshold below which a lower bound counts
        as zero.
    method : {"auto", "dense", "power"}
        ``auto`` uses a dense eigensolve up to :data:`DENSE_EIG_LIMIT`.

    Returns
    -------
    FrameBounds
        Extreme eigenvalues of the frame operator restricted to the subspace.
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    if subspace is not None:
        subspace = np.asarray(subspace, dtype=float)
        if subspace.ndim != 2 or subspace.shape[0] != frame.dim:
            raise ValueError("subspace must be an (N, r) basis matrix")
    if method == "auto":
        method = "dense" if frame.dim <= DENSE_EIG_LIMIT else "power"
    if method == "dense":
        eig = _restricted_eigvals(frame, subspace)
        lower, upper = float(eig[0]), float(eig[-1])
        if subspace is not None and eig.size:
            deficient = int(np.sum(eig <= tolerance * upper))
        else:
            deficient = 0
    elif method == "power":
        lower, upper = _power_extremes(frame, subspace, tolerance)
        deficient = int(lower <= tolerance * upper)
    else:
        raise ValueError(f"unknown method {method!r}")
    if upper <= 0:
        raise FrameError("zero frame: no lower frame bound")
    if deficient:
        raise FrameError(
            f"family does not frame the subspace: lower bound {lower:.3e} "
            f"(deficient subspace dimension {deficient})"
        )
    return FrameBounds(lower, upper, "estimated", tolerance)


def canonical_dual(
    frame: Frame, subspace: np.ndarray | None = None, cond_limit: float = 1e12
) -> Frame:
    """Canonical dual ``(S^{-1} u_lambda)`` with ``S`` restricted to the span (or ``subspace``)."""
    Q = span_basis(frame) if subspace is None else np.asarray(subspace, dtype=float)
    G = Q.T @ frame_operator(frame) @ Q
    w, V = np.linalg.eigh(G)
    if w[-1] <= 0 or w[0] <= w[-1] / cond_limit:
        deficient = int(np.sum(w <= w[-1] / cond_limit)) if w[-1] > 0 else len(w)
        raise FrameError(
            f"frame operator is numerically singular on the subspace "
            f"(deficient dimension {deficient} of {len(w)})"
        )
    S_inv = Q @ (V / w) @ V.T @ Q.T
    return Frame(frame.labels, frame.vectors @ S_inv.T)


@dataclass(frozen=True)
class DualityReport:
    max_residual: float
    tolerance: float
    trials: int

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tolerance


def check_duality(
    frame: Frame,
    dual: Frame,
    trials: int = 20,
    tol: float = 1e-10,
    subspace: np.ndarray | None = None,
    rng: Xoshiro256StarStar | int | None = None,
) -> DualityReport:
    """Check ``x = sum <x,u_lambda> dual_lambda`` on the span.

    The residual is taken over every basis direction of the span and over
    ``trials`` random vectors in it.
    """
    if frame.labels != dual.labels:
        raise ValueError("frame and dual must share one index set")
    if frame.dim != dual.dim:
        raise ValueError("frame and dual must live in the same space")
    Q = span_basis(frame) if subspace is None else np.asarray(subspace, dtype=float)
    gen = as_generator(rng)
    X = np.hstack([Q, Q @ gen.standard_normal((Q.shape[1], trials))]) if trials else Q
    R = X - dual.vectors.T @ (frame.vectors @ X)
    res = np.linalg.norm(R, axis=0) / np.linalg.norm(X, axis=0)
    return DualityReport(float(res.max()), tol, trials)


def biorthogonality_residual(frame: Frame, dual: Frame) -> float:
    """``max |<u_lambda, dual_nu> - delta_{lambda nu}|``; zero iff the pair is biorthogonal.

    Returns ``inf`` without forming the Gram matrix when the frame has more
    elements than its ambient dimension (an overcomplete family has no
    biorthogonal sequence).
    """
    if frame.count > frame.dim:
        return float("inf")
    G = frame.vectors @ dual.vectors.T
    return float(np.max(np.abs(G - np.eye(frame.count))))


def is_norm_bounded_below(frame: Frame, a: float) -> bool:
    if a <= 0:
        raise ValueError("a must be positive")
    return bool(frame.norms.min() >= a)
