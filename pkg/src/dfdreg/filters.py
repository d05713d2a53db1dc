"""Regularizing filter families and numerical checks of their defining properties.

A filter family maps ``(alpha, kappa)`` to ``f_alpha(kappa)`` and is required
to satisfy

* bounded sup norm for every ``alpha`` (F1),
* ``sup |kappa f_alpha(kappa)| <= C`` uniformly (F2),
* ``f_alpha(kappa) -> 1/kappa`` as ``alpha -> 0`` (F3).

A family *qualifies* for exponent ``mu`` with constant ``Ct`` when
``sup_kappa kappa^mu |1 - kappa f_alpha(kappa)| <= Ct alpha^mu`` for all alpha.
"""

from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

#: Default grids for the axiom and qualification sweeps.
DEFAULT_ALPHA_GRID = np.logspace(-6, 0, 40)
DEFAULT_KAPPA_GRID = np.logspace(-4, 1, 400)


class AlphaRoundingWarning(UserWarning):
    """Landweber parameter ``1/alpha`` was rounded to an integer iteration count."""


@dataclass(frozen=True)
class FilterFamily:
    """A filter ``f_alpha(kappa)`` with its sup norm and claimed constants.

    ``qualification`` lists ``(mu_max, Ct)`` pairs: the family claims
    ``(mu, Ct)`` for every ``0 < mu <= mu_max``.  ``mu_max`` may be ``inf``.
    ``sharp_constants`` lists ``(mu, Ct)`` pairs valid at that exponent only.
    """

    name: str
    evaluate: Callable[[float, np.ndarray], np.ndarray] = field(repr=False)
    sup_norm: Callable[[float], float] = field(repr=False)
    axiom_constant_C: float = 1.0
    qualification: tuple[tuple[float, float], ...] = ()
    sharp_constants: tuple[tuple[float, float], ...] = ()
    sup_norm_exact: bool = True
    rate_constant: float | None = None
    """``c_f`` with ``sup_norm(alpha) <= c_f / alpha`` when the family satisfies (R1)."""
    kappa_limit: float = math.inf
    """Quasi-singular values must stay strictly below this value at the use site."""
    residual_fn: Callable[[float, np.ndarray], np.ndarray] | None = field(default=None, repr=False)
    """Closed form of ``1 - kappa f_alpha(kappa)``, free of cancellation."""

    def __call__(self, alpha: float, kappa):
        if alpha <= 0:
            raise ValueError("alpha must be positive")
        return self.evaluate(alpha, np.asarray(kappa, dtype=float))

    def residual(self, alpha: float, kappa):
        """``1 - kappa f_alpha(kappa)``, from the closed form when the family has one."""
        kappa = np.asarray(kappa, dtype=float)
        if self.residual_fn is not None:
            if alpha <= 0:
                raise ValueError("alpha must be positive")
            return self.residual_fn(alpha, kappa)
        return 1.0 - kappa * self(alpha, kappa)

    def claimed_constant(self, mu: float) -> float | None:
        """Smallest claimed ``Ct`` for exponent ``mu``, or ``None`` if unqualified."""
        cands = [ct for mu_max, ct in self.qualification if 0 < mu <= mu_max * (1 + 1e-12)]
        if cands:
            cands += [ct for m, ct in self.sharp_constants if abs(m - mu) <= 1e-12 * m]
        return min(cands) if cands else None

    @property
    def max_qualification(self) -> float:
        return max((m for m, _ in self.qualification), default=0.0)


def truncated_filter(variant: str = "kappa_cutoff") -> FilterFamily:
    """Spectral cut-off.

    ``sigma_squared_cutoff`` keeps ``kappa`` with ``kappa**2 >= alpha``;
    ``kappa_cutoff`` keeps ``kappa >= alpha`` and qualifies for every ``mu``
    with ``Ct = 1``.
    """
    if variant == "sigma_squared_cutoff":

        def evaluate(alpha, kappa):
            with np.errstate(divide="ignore"):
                return np.where(kappa**2 < alpha, 0.0, 1.0 / kappa)

        return FilterFamily(
            "truncated:sigma_squared_cutoff",
            evaluate,
            lambda a: 1.0 / math.sqrt(a),
            1.0,
            residual_fn=lambda a, k: np.where(k**2 < a, 1.0, 0.0),
        )
    if variant == "kappa_cutoff":

        def evaluate(alpha, kappa):
            with np.errstate(divide="ignore"):
                return np.where(kappa < alpha, 0.0, 1.0 / kappa)

        return FilterFamily(
            "truncated:kappa_cutoff",
            evaluate,
            lambda a: 1.0 / a,
            1.0,
            qualification=((math.inf, 1.0),),
            rate_constant=1.0,
            residual_fn=lambda a, k: np.where(k < a, 1.0, 0.0),
        )
    raise ValueError(f"unknown truncation variant {variant!r}")


def tikhonov_filter(variant: str = "rate_form") -> FilterFamily:
    """Tikhonov filter ``kappa / (kappa**2 + alpha)`` or its rate form with ``alpha**2``."""
    if variant == "paper_form":
        return FilterFamily(
            "tikhonov:paper_form",
            lambda a, k: k / (k * k + a),
            lambda a: 0.5 / math.sqrt(a),
            1.0,
            residual_fn=lambda a, k: a / (k * k + a),
        )
    if variant == "rate_form":
        return FilterFamily(
            "tikhonov:rate_form",
            lambda a, k: k / (k * k + a * a),
            lambda a: 0.5 / a,
            1.0,
            qualification=((2.0, 1.0),),
            sharp_constants=((1.0, 0.5),),
            rate_constant=0.5,
            residual_fn=lambda a, k: a * a / (k * k + a * a),
        )
    raise ValueError(f"unknown Tikhonov variant {variant!r}")


def _iterations(alpha: float) -> int:
    m = max(1, int(round(1.0 / alpha)))
    if abs(m * alpha - 1.0) > 1e-9:
        warnings.warn(
            f"Landweber alpha={alpha:g} is not 1/m for an integer m; using m={m}",
            AlphaRoundingWarning,
            stacklevel=3,
        )
    return m


def landweber_filter(omega: float = 1.0) -> FilterFamily:
    """Landweber iteration after ``m = 1/alpha`` steps with step size ``omega``.

    ``f(kappa) = (1 - (1 - omega kappa**2)**m) / kappa`` for
    ``omega kappa**2 <= 1``; beyond that the family is continued by
    ``1/kappa``, which is where the formula lands at ``omega kappa**2 = 1``.
    Operators with ``omega * kappa_max**2 >= 1`` are rejected when a filtered
    operator is built (``kappa_limit``).
    """
    if omega <= 0:
        raise ValueError("omega must be positive")

    def evaluate(alpha, kappa):
        m = _iterations(alpha)
        s = np.minimum(omega * kappa * kappa, 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = -np.expm1(m * np.log1p(-s)) / kappa
        return np.where(s >= 1.0, 1.0 / kappa, out)

    def residual(alpha, kappa):
        s = np.minimum(omega * kappa * kappa, 1.0)
        with np.errstate(divide="ignore"):
            return np.where(s >= 1.0, 0.0, np.exp(_iterations(alpha) * np.log1p(-s)))

    def sup_norm(alpha):
        # sup over kappa of f equals sqrt(omega) * max_{t in (0,1]} (1-(1-t^2)^m)/t
        m = _iterations(alpha)
        g = lambda t: -np.expm1(m * np.log1p(-t * t)) / t if t < 1 else 1.0
        t = np.linspace(1e-6, 1.0, 2049)
        vals = np.array([g(ti) for ti in t])
        i = int(np.argmax(vals))
        lo, hi = t[max(i - 1, 0)], t[min(i + 1, len(t) - 1)]
        res = minimize_scalar(lambda x: -g(x), bounds=(lo, hi), method="bounded", options={"xatol": 1e-13})
        return math.sqrt(omega) * max(vals[i], -res.fun)

    return FilterFamily(
        f"landweber omega={omega:g}",
        evaluate,
        sup_norm,
        1.0,
        sup_norm_exact=False,
        kappa_limit=1.0 / math.sqrt(omega),
        residual_fn=residual,
    )


def filter_from_spectral(
    h: Callable[[float, np.ndarray], np.ndarray],
    name: str = "spectral",
    axiom_constant_C: float = 1.0,
    sup_norm: Callable[[float], float] | None = None,
    kappa_grid: np.ndarray = DEFAULT_KAPPA_GRID,
) -> FilterFamily:
    """Filter ``f_alpha(kappa) = kappa * h_alpha(kappa**2)`` from a spectral form ``h_alpha(lambda) ~ 1/lambda``.

    Without ``sup_norm`` the sup norm is estimated on ``kappa_grid`` and the
    family is flagged as numerically estimated.
    """

    def evaluate(alpha, kappa):
        return kappa * h(alpha, kappa * kappa)

    exact = sup_norm is not None
    if sup_norm is None:
        sup_norm = lambda a: float(np.max(np.abs(evaluate(a, kappa_grid))))
    return FilterFamily(name, evaluate, sup_norm, axiom_constant_C, sup_norm_exact=exact)


@dataclass(frozen=True)
class AxiomReport:
    f1: bool
    f2: bool
    f3: bool
    f3_monotone: bool
    max_kappa_f: float
    max_limit_error: float
    worst_f1_ratio: float

    @property
    def passed(self) -> bool:
        return self.f1 and self.f2 and self.f3


def verify_filter_axioms(
    f: FilterFamily,
    alpha_grid=DEFAULT_ALPHA_GRID,
    kappa_grid=DEFAULT_KAPPA_GRID,
    limit_tol: float = 1e-2,
    limit_kappa_min: float = 0.1,
) -> AxiomReport:
    """Grid check of (F1)-(F3).

    (F3) is evaluated at the smallest grid ``alpha`` for the grid points with
    ``kappa >= limit_kappa_min``; ``f3_monotone`` records whether
    ``|f_alpha(kappa) - 1/kappa|`` is nonincreasing along decreasing alpha.
    """
    alpha_grid = np.sort(np.asarray(alpha_grid, dtype=float))[::-1]
    kappa_grid = np.asarray(kappa_grid, dtype=float)
    if np.any(alpha_grid <= 0) or np.any(kappa_grid <= 0):
        raise ValueError("grids must be positive")
    F = np.array([f(a, kappa_grid) for a in alpha_grid])
    finite = np.all(np.isfinite(F), axis=1)
    sups = np.array([f.sup_norm(a) for a in alpha_grid])
    ratios = np.max(np.abs(F), axis=1) / sups
    f1 = bool(np.all(finite) and np.all(ratios <= 1 + 1e-9))
    kf = np.abs(kappa_grid * F)
    max_kf = float(np.max(kf))
    f2 = max_kf <= f.axiom_constant_C * (1 + 1e-9)
    sel = kappa_grid >= limit_kappa_min
    err = np.abs(F[:, sel] - 1.0 / kappa_grid[sel])
    max_lim = float(err[-1].max()) if sel.any() else 0.0
    f3 = max_lim <= limit_tol
    monotone = bool(np.all(np.diff(err, axis=0) <= 1e-12 * (1.0 / kappa_grid[sel])))
    return AxiomReport(f1, f2, f3, monotone, max_kf, max_lim, float(ratios.max()))


@dataclass(frozen=True)
class QualificationReport:
    mu: float
    constant: float
    claimed: float | None
    ratios: np.ndarray = field(repr=False)
    """Per-alpha ratio ``max_kappa kappa^mu |1 - kappa f| / alpha^mu``, alpha decreasing."""

    @property
    def passed(self) -> bool:
        return self.claimed is not None and self.constant <= self.claimed * (1 + 1e-6)


def verify_qualification(
    f: FilterFamily,
    mu: float,
    alpha_grid=DEFAULT_ALPHA_GRID,
    kappa_grid=DEFAULT_KAPPA_GRID,
) -> QualificationReport:
    if mu <= 0:
        raise ValueError("mu must be positive")
    alpha_grid = np.sort(np.asarray(alpha_grid, dtype=float))[::-1]
    kappa_grid = np.asarray(kappa_grid, dtype=float)
    ratios = np.array(
        [np.max(kappa_grid**mu * np.abs(f.residual(a, kappa_grid))) / a**mu for a in alpha_grid]
    )
    return QualificationReport(mu, float(ratios.max()), f.claimed_constant(mu), ratios)


_SPEC = re.compile(r"^\s*(?P<name>[a-z_]+)(?::(?P<variant>[a-z_]+))?(?P<params>(?:\s+[a-z_]+=\S+)*)\s*$")


def parse_filter_spec(spec: str) -> FilterFamily:
    """Build a family from a spec such as ``"tikhonov:rate_form"`` or ``"landweber omega=0.9"``."""
    m = _SPEC.match(spec.strip().strip('"'))
    if not m:
        raise ValueError(f"cannot parse filter spec {spec!r}")
    name, variant = m["name"], m["variant"]
    params = dict(p.split("=", 1) for p in m["params"].split())
    if name == "tikhonov" and not params:
        return tikhonov_filter(variant or "rate_form")
    if name == "truncated" and not params:
        return truncated_filter(variant or "kappa_cutoff")
    if name == "landweber" and variant is None and set(params) <= {"omega"}:
        return landweber_filter(float(params.get("omega", 1.0)))
    raise ValueError(f"unknown filter spec {spec!r}")
