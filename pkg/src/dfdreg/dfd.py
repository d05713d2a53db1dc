"""Diagonal frame decompositions ``(u, v, kappa)`` with ``K* v_lambda = kappa_lambda u_lambda``."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from .frames import (
    Frame,
    FrameBounds,
    FrameError,
    biorthogonality_residual,
    canonical_dual,
    check_duality,
    estimate_frame_bounds,
)
from .operators import (
    LinearOperator,
    SvdTriple,
    coimage_basis,
    make_hp_operator,
    range_basis,
    svd_decompose,
)
from .rng import as_generator

#: Relative threshold above which a frame counts as (numerically) a Riesz basis.
RIESZ_TOL = 1e-10


class DecompositionError(ValueError):
    """The triple violates a defining property of a DFD."""


@dataclass(frozen=True, eq=False)
class DiagonalFrameDecomposition:
    """A DFD of ``operator`` together with a chosen dual ``u_dual`` of ``u``.

    ``kappa_family`` optionally returns the quasi-singular values of the same
    construction at another truncation level; the ill-posedness diagnostics
    use it to observe trends.
    """

    u: Frame
    v: Frame
    kappa: np.ndarray
    u_dual: Frame
    operator: LinearOperator
    name: str = ""
    truncation: int | None = None
    kappa_family: Callable[[int], np.ndarray] | None = field(default=None, repr=False)

    def __post_init__(self):
        kappa = np.array(self.kappa, dtype=float)
        labels = self.u.labels
        if self.v.labels != labels or self.u_dual.labels != labels:
            raise DecompositionError("u, v and u_dual must share one index set")
        if kappa.shape != (len(labels),):
            raise DecompositionError(f"{kappa.size} quasi-singular values for {len(labels)} labels")
        bad = np.flatnonzero(~(np.isfinite(kappa) & (kappa > 0)))
        if bad.size:
            shown = ", ".join(f"{labels[i]}={kappa[i]:g}" for i in bad[:5])
            raise DecompositionError(f"quasi-singular values must be positive; offending labels: {shown}")
        n_out, n_in = self.operator.shape
        if self.u.dim != n_in or self.u_dual.dim != n_in:
            raise DecompositionError(f"u lives in R^{self.u.dim}, operator domain is R^{n_in}")
        if self.v.dim != n_out:
            raise DecompositionError(f"v lives in R^{self.v.dim}, operator range is R^{n_out}")
        kappa.setflags(write=False)
        object.__setattr__(self, "kappa", kappa)

    @property
    def labels(self) -> tuple[str, ...]:
        return self.u.labels

    def __len__(self):
        return len(self.u.labels)

    @cached_property
    def range_basis(self) -> np.ndarray:
        return range_basis(self.operator)

    @cached_property
    def coimage_basis(self) -> np.ndarray:
        return coimage_basis(self.operator)

    @cached_property
    def bounds_u(self) -> FrameBounds:
        return self.u.bounds or estimate_frame_bounds(self.u, self.coimage_basis)

    @cached_property
    def bounds_v(self) -> FrameBounds:
        return self.v.bounds or estimate_frame_bounds(self.v, self.range_basis)

    @cached_property
    def bounds_u_dual(self) -> FrameBounds:
        return self.u_dual.bounds or estimate_frame_bounds(self.u_dual, self.coimage_basis)

    @cached_property
    def biorthogonality_residual(self) -> float:
        return biorthogonality_residual(self.u, self.u_dual)

    @property
    def is_riesz(self) -> bool:
        return self.biorthogonality_residual <= RIESZ_TOL


def dfd_from_svd(
    triple: SvdTriple,
    op: LinearOperator,
    name: str = "svd",
    kappa_family: Callable[[int], np.ndarray] | None = None,
) -> DiagonalFrameDecomposition:
    """The SVD as the orthonormal special case: ``u_dual = u``, ``kappa = sigma``."""
    if triple.u.shape[1] != op.shape[1] or triple.v.shape[1] != op.shape[0]:
        raise DecompositionError("singular system does not match the operator dimensions")
    ku = op.apply(triple.u.T)
    if np.max(np.abs(ku - triple.v.T * triple.sigmas)) > 1e-10 * max(1.0, triple.sigmas[0]):
        raise DecompositionError("triple does not satisfy K u_n = sigma_n v_n")
    labels = tuple(str(i) for i in range(triple.rank))
    exact = FrameBounds(1.0, 1.0, "exact")
    u = Frame(labels, triple.u, exact)
    v = Frame(labels, triple.v, exact)
    return DiagonalFrameDecomposition(u, v, triple.sigmas, u, op, name, op.shape[1], kappa_family)


def hp_kappa(N: int, variant: str = "standard") -> np.ndarray:
    """Quasi-singular values of the block construction at truncation ``N``."""
    out = []
    for n in range(N):
        s = np.sqrt(n + 1.0)
        out.append(1.0 if variant == "standard" else s)
        out.extend([1.0 / s] * (n + 1))
    return np.array(out)


def dfd_example_hp(N: int, variant: str = "standard") -> DiagonalFrameDecomposition:
    """Overcomplete block DFD of the diagonal operator ``x_i / sqrt(i+1)``.

    Block ``n`` has ``n + 2`` elements supported on ``e_n``::

        u = (e_n/sqrt(n+1), ..., e_n/sqrt(n+1))            [standard]
        u = (e_n/(n+1), e_n/sqrt(n+1), ..., e_n/sqrt(n+1)) [unbounded_kappa]
        v = (e_n, e_n/sqrt(n+1), ..., e_n/sqrt(n+1))
        kappa = (1 or sqrt(n+1), 1/sqrt(n+1), ..., 1/sqrt(n+1))

    The standard variant has frame bounds (1, 2) for ``u`` and (2, 2) for
    ``v``; quasi-singular values accumulate at 0 and 1 (0 and infinity for
    ``unbounded_kappa``).
    """
    if N < 2:
        raise ValueError("N must be at least 2")
    if variant not in ("standard", "unbounded_kappa"):
        raise ValueError(f"unknown variant {variant!r}")
    L = N * (N + 3) // 2
    U = np.zeros((L, N))
    V = np.zeros((L, N))
    labels = []
    row = 0
    for n in range(N):
        s = np.sqrt(n + 1.0)
        U[row, n] = 1.0 / s if variant == "standard" else 1.0 / (n + 1.0)
        V[row, n] = 1.0
        U[row + 1 : row + n + 2, n] = 1.0 / s
        V[row + 1 : row + n + 2, n] = 1.0 / s
        labels.extend(f"{n}.{j}" for j in range(n + 2))
        row += n + 2
    kappa = hp_kappa(N, variant)
    op = make_hp_operator(N)
    u = Frame(tuple(labels), U)
    v = Frame(tuple(labels), V)
    return DiagonalFrameDecomposition(
        u,
        v,
        kappa,
        canonical_dual(u),
        op,
        f"example_hp:{variant}",
        N,
        lambda n: hp_kappa(n, variant),
    )


def derive_dfd_from_range_frame(
    op: LinearOperator,
    v: Frame,
    kappa_rule: str = "normalize_u",
    kappa=None,
    frame_floor: float = 1e-8,
    name: str = "derived",
) -> tuple[DiagonalFrameDecomposition, FrameBounds]:
    """Build ``u_lambda = K* v_lambda / kappa_lambda`` from a frame ``v`` of ``ran K``.

    With ``kappa_rule="normalize_u"`` the quasi-singular values are
    ``||K* v_lambda||``, so every ``u_lambda`` has unit norm.  The result is
    accepted only if ``u`` frames ``ker(K)^perp`` with lower bound above
    ``frame_floor``.

    Returns
    -------
    dfd, bounds_u
    """
    if v.dim != op.shape[0]:
        raise DecompositionError(f"v lives in R^{v.dim}, operator range is R^{op.shape[0]}")
    W = op.adjoint_apply(v.vectors.T).T
    norms = np.linalg.norm(W, axis=1)
    scale = op.norm * np.maximum(v.norms, 1e-300)
    zero = np.flatnonzero(norms <= 1e-12 * scale)
    if zero.size:
        raise DecompositionError(
            "K* v_lambda vanishes (v_lambda orthogonal to ran K) for labels "
            + ", ".join(v.labels[i] for i in zero[:5])
        )
    Q = range_basis(op)
    outside = np.linalg.norm(v.vectors.T - Q @ (Q.T @ v.vectors.T), axis=0)
    off = np.flatnonzero(outside > 1e-10 * v.norms)
    if off.size:
        raise DecompositionError(
            "v is not contained in ran K; offending labels " + ", ".join(v.labels[i] for i in off[:5])
        )
    try:
        bv = estimate_frame_bounds(v, Q)
    except FrameError as exc:
        raise DecompositionError(f"v does not frame ran K: {exc}") from exc
    if kappa_rule == "normalize_u":
        kappa = norms
    elif kappa_rule == "user":
        kappa = np.asarray(kappa, dtype=float)
        if kappa.shape != norms.shape or np.any(kappa <= 0):
            raise DecompositionError("user kappa must be positive with one value per label")
    else:
        raise ValueError(f"unknown kappa rule {kappa_rule!r}")
    u = Frame(v.labels, W / kappa[:, None])
    P = coimage_basis(op)
    try:
        bu = estimate_frame_bounds(u, P)
    except FrameError as exc:
        raise DecompositionError(f"derived u does not frame ker(K)^perp: {exc}") from exc
    if bu.lower < frame_floor:
        raise DecompositionError(
            f"derived u has lower frame bound {bu.lower:.3e} below the floor {frame_floor:g} "
            f"(bounds A={bu.lower:.6g}, B={bu.upper:.6g})"
        )
    dual = canonical_dual(u, P)
    dfd = DiagonalFrameDecomposition(
        u.with_bounds(bu), v.with_bounds(bv), kappa, dual, op, name, op.shape[1]
    )
    return dfd, bu


@dataclass(frozen=True)
class QuasiSingularReport:
    elementwise_residual: float
    worst_label: str
    operator_residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.elementwise_residual <= self.tolerance and self.operator_residual <= self.tolerance


def validate_quasi_singular(
    dfd: DiagonalFrameDecomposition, tol: float = 1e-10, trials: int = 20, rng=0
) -> QuasiSingularReport:
    """Check ``K* v = kappa u`` element-wise and as ``T_v K = M_kappa T_u`` on random vectors.

    The tolerance is relative to ``max(1, ||K||)``.
    """
    op = dfd.operator
    R = op.adjoint_apply(dfd.v.vectors.T).T - dfd.kappa[:, None] * dfd.u.vectors
    per = np.linalg.norm(R, axis=1)
    worst = int(np.argmax(per))
    X = as_generator(rng).standard_normal((op.shape[1], trials))
    D = dfd.v.vectors @ op.apply(X) - dfd.kappa[:, None] * (dfd.u.vectors @ X)
    op_res = float(np.max(np.linalg.norm(D, axis=0) / np.linalg.norm(X, axis=0)))
    return QuasiSingularReport(float(per[worst]), dfd.labels[worst], op_res, tol * max(1.0, op.norm))


def pseudo_inverse_via_dfd(dfd: DiagonalFrameDecomposition, y) -> np.ndarray:
    """``K^+ y = sum kappa^-1 <y, v_lambda> u_dual_lambda`` after projecting ``y`` onto ``ran K``."""
    y = np.asarray(y, dtype=float)
    Q = dfd.range_basis
    y = Q @ (Q.T @ y)
    c = dfd.v.vectors @ y
    return dfd.u_dual.vectors.T @ (c.T / dfd.kappa).T


@dataclass(frozen=True)
class Cluster:
    center: float
    count: int
    low: float
    high: float


def cluster_values(values, radius: float) -> list[Cluster]:
    """1-D single-linkage clusters: neighbours closer than ``radius`` are merged."""
    if radius <= 0:
        raise ValueError("cluster radius must be positive")
    x = np.sort(np.asarray(values, dtype=float))
    cuts = np.flatnonzero(np.diff(x) > radius) + 1
    return [
        Cluster(float(g.mean()), int(g.size), float(g[0]), float(g[-1]))
        for g in np.split(x, cuts)
    ]


@dataclass(frozen=True)
class IllposednessReport:
    inf_kappa: float
    sup_kappa: float
    v_norm_lower: float
    u_norm_lower: float
    verdict: str
    clusters: list[Cluster]
    refined_inf_kappa: float | None = None
    refined_sup_kappa: float | None = None
    decay_ratio: float | None = None
    notes: tuple[str, ...] = ()

    def accumulation_clusters(self, min_count: int = 10) -> list[Cluster]:
        return [c for c in self.clusters if c.count >= min_count]


def illposedness_report(
    dfd: DiagonalFrameDecomposition,
    cluster_radius: float = 0.05,
    kappa_floor: float = 1e-3,
    decay_factor: float = 1.2,
    refined_kappa=None,
) -> IllposednessReport:
    """Finite-truncation proxy for boundedness of the pseudoinverse.

    ``inf kappa`` is compared at truncation ``N`` and ``2N`` (``refined_kappa``
    or ``dfd.kappa_family(2N)``).  A drop by ``decay_factor`` or more gives
    ``unbounded_indicated``; a stable value above ``kappa_floor`` gives
    ``bounded_pseudoinverse``; anything else is ``inconclusive``.
    """
    kappa = dfd.kappa
    inf_k, sup_k = float(kappa.min()), float(kappa.max())
    notes = []
    if refined_kappa is None and dfd.kappa_family is not None and dfd.truncation:
        refined_kappa = dfd.kappa_family(2 * dfd.truncation)
    ref_inf = ref_sup = ratio = None
    verdict = "inconclusive"
    if refined_kappa is None:
        notes.append("no refined truncation available; trend not assessed")
    else:
        refined_kappa = np.asarray(refined_kappa, dtype=float)
        ref_inf, ref_sup = float(refined_kappa.min()), float(refined_kappa.max())
        ratio = inf_k / ref_inf
        if ratio >= decay_factor:
            verdict = "unbounded_indicated"
        elif inf_k >= kappa_floor and ref_inf >= kappa_floor:
            verdict = "bounded_pseudoinverse"
    v_low = float(dfd.v.norms.min())
    if verdict != "unbounded_indicated" and inf_k < kappa_floor and v_low < kappa_floor:
        notes.append("v is not norm bounded from below at this truncation; small kappa need not imply instability")
    return IllposednessReport(
        inf_k,
        sup_k,
        v_low,
        float(dfd.u.norms.min()),
        verdict,
        cluster_values(kappa, cluster_radius),
        ref_inf,
        ref_sup,
        ratio,
        tuple(notes),
    )


def duality_ok(dfd: DiagonalFrameDecomposition, tol: float = 1e-10) -> bool:
    return check_duality(dfd.u, dfd.u_dual, tol=tol, subspace=dfd.coimage_basis).passed
