"""Filtered DFD reconstruction ``F_alpha y = sum f_alpha(kappa) <y, v> u_dual`` and a-priori parameter choice."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .dfd import DiagonalFrameDecomposition
from .filters import FilterFamily


@dataclass(frozen=True, eq=False)
class FilteredDfdOperator:
    dfd: DiagonalFrameDecomposition
    filter: FilterFamily
    alpha: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        kmax = float(self.dfd.kappa.max())
        if not kmax < self.filter.kappa_limit:
            raise ValueError(
                f"filter {self.filter.name} requires kappa < {self.filter.kappa_limit:.6g}, "
                f"but the decomposition has kappa_max = {kmax:.6g}"
            )

    @property
    def weights(self) -> np.ndarray:
        return self.filter(self.alpha, self.dfd.kappa)

    def __call__(self, y) -> np.ndarray:
        return filtered_apply(self, y)

    def to_dense(self) -> np.ndarray:
        return (self.dfd.u_dual.vectors.T * self.weights) @ self.dfd.v.vectors


def filtered_apply(op: FilteredDfdOperator, y) -> np.ndarray:
    """Apply the filtered DFD to a data vector (or to the columns of a 2-D array)."""
    y = np.asarray(y, dtype=float)
    if y.shape[0] != op.dfd.v.dim:
        raise ValueError(f"data of dimension {y.shape[0]}, expected {op.dfd.v.dim}")
    c = op.dfd.v.vectors @ y
    return op.dfd.u_dual.vectors.T @ (c.T * op.weights).T


@dataclass(frozen=True)
class NormBound:
    bound: float
    empirical: float

    @property
    def holds(self) -> bool:
        return self.empirical <= self.bound * (1 + 1e-6)


def operator_norm_bound(op: FilteredDfdOperator) -> NormBound:
    """``||F_alpha|| <= ||f_alpha||_inf sqrt(B_udual B_v)`` against the assembled operator norm."""
    d = op.dfd
    bound = op.filter.sup_norm(op.alpha) * np.sqrt(d.bounds_u_dual.upper * d.bounds_v.upper)
    empirical = np.linalg.norm(op.to_dense(), 2)
    return NormBound(float(bound), float(empirical))


def apriori_choice(delta: float, rho: float = 1.0, mu: float = 1.0, c: float = 1.0) -> float:
    """``alpha = c (delta / rho)^(1/(mu+1))``."""
    if delta <= 0 or rho <= 0 or mu <= 0 or c <= 0:
        raise ValueError("delta, rho, mu and c must be positive")
    return c * (delta / rho) ** (1.0 / (mu + 1.0))


@dataclass(frozen=True)
class ParameterChoice:
    """A rule ``delta -> alpha`` depending on the noise level only."""

    rule: str
    rho: float = 1.0
    mu: float = 1.0
    c: float = 1.0
    function: Callable[[float], float] | None = field(default=None, repr=False)

    @classmethod
    def apriori(cls, rho: float = 1.0, mu: float = 1.0, c: float = 1.0) -> "ParameterChoice":
        if rho <= 0 or mu <= 0 or c <= 0:
            raise ValueError("rho, mu and c must be positive")
        return cls("apriori_rate", rho, mu, c)

    @classmethod
    def from_function(cls, fn: Callable[[float], float]) -> "ParameterChoice":
        return cls("user_function", function=fn)

    def __call__(self, delta: float) -> float:
        if self.rule == "apriori_rate":
            return apriori_choice(delta, self.rho, self.mu, self.c)
        alpha = float(self.function(delta))
        if not alpha > 0:
            raise ValueError(f"parameter choice returned non-positive alpha {alpha} at delta={delta}")
        return alpha


@dataclass(frozen=True)
class AdmissibilityReport:
    deltas: np.ndarray
    alphas: np.ndarray
    noise_amplification: np.ndarray
    """``delta * ||f_alpha(delta)||_inf`` along the grid."""
    alpha_decays: bool
    amplification_decays: bool

    @property
    def passed(self) -> bool:
        return self.alpha_decays and self.amplification_decays


def _decays(seq: np.ndarray, factor: float) -> bool:
    return bool(np.all(np.diff(seq) <= 1e-12 * np.abs(seq[:-1])) and seq[0] >= factor * seq[-1] and seq[-1] >= 0)


def check_admissibility(
    choice: ParameterChoice, filt: FilterFamily, delta_grid, decay: float = 2.0
) -> AdmissibilityReport:
    """Finite-grid proxy for ``alpha(delta) -> 0`` and ``delta ||f_alpha(delta)||_inf -> 0``.

    Both sequences must be nonincreasing along the (decreasing) grid and fall
    by at least ``decay`` overall.
    """
    deltas = np.sort(np.asarray(delta_grid, dtype=float))[::-1]
    alphas = np.array([choice(d) for d in deltas])
    amp = deltas * np.array([filt.sup_norm(a) for a in alphas])
    return AdmissibilityReport(deltas, alphas, amp, _decays(alphas, decay), _decays(amp, decay))


def reconstruct(
    dfd: DiagonalFrameDecomposition,
    filt: FilterFamily,
    choice: ParameterChoice,
    y_delta,
    delta: float,
) -> tuple[np.ndarray, float]:
    alpha = choice(delta)
    return filtered_apply(FilteredDfdOperator(dfd, filt, alpha), y_delta), alpha


@dataclass(frozen=True)
class ErrorSplit:
    total: float
    noise_term: float
    approximation_term: float

    @property
    def consistent(self) -> bool:
        return self.total <= self.noise_term + self.approximation_term + 1e-10


def error_split(op: FilteredDfdOperator, x_dagger, y_delta, delta: float) -> ErrorSplit:
    """Total error against ``||F_alpha|| delta + ||sum (1 - kappa f) <x, u> u_dual||``."""
    d = op.dfd
    x_dagger = np.asarray(x_dagger, dtype=float)
    total = np.linalg.norm(filtered_apply(op, y_delta) - x_dagger)
    norm_f = np.linalg.norm(op.to_dense(), 2)
    resid = op.filter.residual(op.alpha, d.kappa) * (d.u.vectors @ x_dagger)
    approx = np.linalg.norm(d.u_dual.vectors.T @ resid)
    return ErrorSplit(float(total), float(norm_f * delta), float(approx))
