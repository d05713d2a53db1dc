"""Source conditions, noise models, convergence-rate studies and the order-optimality witness."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.stats import linregress

from .dfd import DiagonalFrameDecomposition
from .filters import FilterFamily
from .frames import CoefficientSequence
from .regularize import FilteredDfdOperator, apriori_choice, filtered_apply
from .rng import Xoshiro256StarStar, as_generator

#: Largest relative least-squares residual accepted when realizing a source for an overcomplete ``u``.
SOURCE_FIT_TOL = 1e-8


class UnqualifiedFilterError(ValueError):
    """The filter does not claim qualification for the requested exponent."""


class SourceRealizationError(ValueError):
    """The requested source coefficients are not analysis coefficients of any vector."""


class NotRieszError(ValueError):
    """The decomposition has no biorthogonal dual of ``u``."""


@dataclass(frozen=True, eq=False)
class SourceElement:
    """``x_dagger`` with ``<x_dagger, u_lambda> = kappa_lambda**mu * omega_lambda`` and ``||omega|| <= rho``."""

    x_dagger: np.ndarray
    omega: CoefficientSequence
    mu: float
    rho: float
    fit_residual: float = 0.0


def _profile_omega(dfd: DiagonalFrameDecomposition, rho: float, profile: str, nu=None, r=None, omega=None):
    L = len(dfd)
    if profile == "one_hot":
        if nu is None:
            raise ValueError("one_hot profile needs a label nu")
        w = np.zeros(L)
        w[dfd.labels.index(str(nu))] = rho
        return w
    if profile == "geometric":
        if r is None or not 0 < r < 1:
            raise ValueError("geometric profile needs a ratio 0 < r < 1")
        # rank = position in label order (decreasing kappa for SVD decompositions)
        w = r ** np.arange(L, dtype=float)
        return rho * w / np.linalg.norm(w)
    if profile == "user":
        w = np.asarray(omega.values if isinstance(omega, CoefficientSequence) else omega, dtype=float)
        if w.shape != (L,):
            raise ValueError(f"omega has shape {w.shape}, expected ({L},)")
        if np.linalg.norm(w) > rho * (1 + 1e-12):
            raise ValueError(f"||omega|| = {np.linalg.norm(w):.6g} exceeds rho = {rho:g}")
        return w
    raise ValueError(f"unknown source profile {profile!r}")


def make_source_element(
    dfd: DiagonalFrameDecomposition,
    mu: float,
    rho: float = 1.0,
    profile: str = "geometric",
    *,
    nu=None,
    r: float | None = None,
    omega=None,
    project: bool = False,
) -> SourceElement:
    """Realize a source element for a given coefficient profile.

    Parameters
    ----------
    profile : {"one_hot", "geometric", "user"}
        ``one_hot`` sets ``omega = rho e_nu``; ``geometric`` sets
        ``omega_lambda`` proportional to ``r**rank`` with ``||omega|| = rho``;
        ``user`` takes ``omega`` as given.
    project : bool
        Only relevant when ``u`` is overcomplete.  The requested coefficients
        are then generally inconsistent; with ``project=True`` the
        least-squares fit is accepted and ``omega`` is replaced by the
        coefficients it actually realizes (rescaled to ``||omega|| <= rho``).

    Returns
    -------
    SourceElement
    """
    if mu < 0 or rho <= 0:
        raise ValueError("mu must be nonnegative and rho positive")
    w = _profile_omega(dfd, rho, profile, nu, r, omega)
    kmu = dfd.kappa**mu
    target = kmu * w
    if dfd.is_riesz:
        x = dfd.u_dual.vectors.T @ target
        return SourceElement(x, CoefficientSequence(dfd.labels, w), mu, rho)
    U = dfd.u.vectors
    x, *_ = np.linalg.lstsq(U, target, rcond=None)
    scale = max(np.linalg.norm(target), 1e-300)
    resid = float(np.linalg.norm(U @ x - target) / scale) if np.any(target) else 0.0
    if resid > SOURCE_FIT_TOL:
        if not project:
            raise SourceRealizationError(
                f"u is overcomplete and the requested coefficients are not realizable "
                f"(relative residual {resid:.3e} > {SOURCE_FIT_TOL:g}); "
                "pass project=True to accept the least-squares projection"
            )
        w = (U @ x) / kmu
        nw = np.linalg.norm(w)
        if nw > rho:
            x, w = x * (rho / nw), w * (rho / nw)
    return SourceElement(x, CoefficientSequence(dfd.labels, w), mu, rho, resid)


def source_coefficients(dfd: DiagonalFrameDecomposition, x, mu: float) -> np.ndarray:
    """``<x, u_lambda> / kappa_lambda**mu``, the inverse of the source map."""
    return (dfd.u.vectors @ np.asarray(x, dtype=float)) / dfd.kappa**mu


def noise_sample(dim: int, delta: float, mode: str = "random_unit", direction=None, rng=None) -> np.ndarray:
    """Noise vector of norm exactly ``delta``.

    ``random_unit`` normalizes a standard normal draw; ``aligned`` scales the
    given ``direction``.
    """
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    if mode == "random_unit":
        g = as_generator(rng).standard_normal(dim)
    elif mode == "aligned":
        if direction is None:
            raise ValueError("aligned noise needs a direction")
        g = np.asarray(direction, dtype=float)
        if g.shape != (dim,):
            raise ValueError(f"direction of shape {g.shape}, expected ({dim},)")
    else:
        raise ValueError(f"unknown noise mode {mode!r}")
    n = np.linalg.norm(g)
    if n == 0.0:
        raise ValueError("noise direction is zero")
    if delta == 0:
        return np.zeros(dim)
    return delta * (g / n)


def rate_bound(dfd: DiagonalFrameDecomposition, filt: FilterFamily, alpha: float, delta: float, mu: float, rho: float) -> float:
    """Error bound ``sqrt(B_udual B_v) ||f_alpha||_inf delta + sqrt(B_udual) Ct alpha**mu rho``."""
    ct = filt.claimed_constant(mu)
    if ct is None:
        raise UnqualifiedFilterError(f"filter {filt.name} claims no qualification at mu={mu:g}")
    bu = dfd.bounds_u_dual.upper
    return float(np.sqrt(bu * dfd.bounds_v.upper) * filt.sup_norm(alpha) * delta + np.sqrt(bu) * ct * alpha**mu * rho)


def fit_loglog_slope(deltas, errors) -> tuple[float, float, tuple[int, ...]]:
    """Least-squares slope of ``log error`` against ``log delta``.

    Rows with a nonpositive error are excluded and their indices returned.

    Returns
    -------
    slope, stderr, excluded
    """
    d = np.asarray(deltas, dtype=float)
    e = np.asarray(errors, dtype=float)
    ok = (e > 0) & (d > 0) & np.isfinite(e)
    excluded = tuple(int(i) for i in np.flatnonzero(~ok))
    if ok.sum() < 3:
        raise ValueError("slope fit needs at least 3 rows with positive error")
    fit = linregress(np.log(d[ok]), np.log(e[ok]))
    return float(fit.slope), float(fit.stderr), excluded


@dataclass(frozen=True, eq=False)
class RateStudyConfig:
    dfd: DiagonalFrameDecomposition
    filter: FilterFamily
    mu: float
    seed: int
    rho: float = 1.0
    c: float = 1.0
    delta_grid: np.ndarray = field(default_factory=lambda: np.logspace(-1, -6, 51))
    noise_draws: int = 5
    source: SourceElement | None = None
    """Defaults to the geometric profile with ratio ``source_ratio``."""
    source_ratio: float = 0.5

    def __post_init__(self):
        grid = np.array(self.delta_grid, dtype=float)
        if grid.ndim != 1 or grid.size < 3 or np.any(grid <= 0):
            raise ValueError("delta grid needs at least 3 positive values")
        if np.any(np.diff(grid) >= 0):
            raise ValueError("delta grid must be strictly decreasing")
        if self.noise_draws < 1:
            raise ValueError("noise_draws must be at least 1")
        if self.mu < 0 or self.rho <= 0 or self.c <= 0:
            raise ValueError("mu must be nonnegative, rho and c positive")
        grid.setflags(write=False)
        object.__setattr__(self, "delta_grid", grid)


@dataclass(frozen=True)
class RateStudyResult:
    """Rows ``(delta, alpha, worst_error, rate_bound)`` aligned with the delta grid."""

    rows: np.ndarray
    fitted_slope: float
    slope_stderr: float
    target_slope: float
    fit_start: int
    excluded: tuple[int, ...] = ()
    saturation_delta: float = 0.0
    """``delta`` at which ``alpha(delta)`` reaches ``min kappa``; below it the truncated problem is well posed."""
    presaturation_slope: float | None = None
    """Slope over the grid rows with ``alpha >= min kappa`` (diagnostic only)."""

    deltas = property(lambda self: self.rows[:, 0])
    alphas = property(lambda self: self.rows[:, 1])
    errors = property(lambda self: self.rows[:, 2])
    bounds = property(lambda self: self.rows[:, 3])

    def passed(self, tol: float = 0.1) -> bool:
        return abs(self.fitted_slope - self.target_slope) <= tol


def run_rate_study(config: RateStudyConfig) -> RateStudyResult:
    """Worst error over noise draws along the delta grid with the a-priori choice.

    Grid point ``i`` draws its noise from substream ``i`` of the seeded
    generator, so rows are independent of evaluation order and a study with
    more draws extends the draws of one with fewer.
    """
    dfd, filt, mu = config.dfd, config.filter, config.mu
    if filt.claimed_constant(mu) is None:
        raise UnqualifiedFilterError(
            f"filter {filt.name} claims no qualification at mu={mu:g} "
            f"(maximal claimed exponent {filt.max_qualification:g}); the rate estimate does not apply"
        )
    src = config.source or make_source_element(dfd, mu, config.rho, "geometric", r=config.source_ratio)
    x = src.x_dagger
    y = dfd.operator.apply(x)
    stream = Xoshiro256StarStar(config.seed)
    m = y.shape[0]
    rows = []
    for delta in config.delta_grid:
        # same state as substream(i) of the seeded generator, without re-jumping from the start
        stream.jump()
        g = Xoshiro256StarStar.from_state(stream.state)
        alpha = apriori_choice(delta, config.rho, mu, config.c)
        Z = np.column_stack([noise_sample(m, delta, "random_unit", rng=g) for _ in range(config.noise_draws)])
        X = filtered_apply(FilteredDfdOperator(dfd, filt, alpha), y[:, None] + Z)
        worst = float(np.max(np.linalg.norm(X - x[:, None], axis=0)))
        rows.append((delta, alpha, worst, rate_bound(dfd, filt, alpha, delta, mu, config.rho)))
    rows = np.array(rows)
    start = len(rows) // 2
    slope, stderr, excl = fit_loglog_slope(rows[start:, 0], rows[start:, 2])
    kmin = float(dfd.kappa.min())
    sat = config.rho * (kmin / config.c) ** (mu + 1)
    pre = rows[:, 1] >= kmin
    pre_slope = fit_loglog_slope(rows[pre, 0], rows[pre, 2])[0] if pre.sum() >= 3 else None
    return RateStudyResult(
        rows,
        slope,
        stderr,
        mu / (mu + 1.0),
        start,
        tuple(start + i for i in excl),
        float(sat),
        pre_slope,
    )


@dataclass(frozen=True, eq=False)
class OptimalityWitness:
    """``x_nu = rho kappa_nu**mu u_dual_nu`` with data bound ``delta_nu = rho kappa_nu**(mu+1) / sqrt(A_v)``."""

    nu: str
    kappa: float
    x_nu: np.ndarray
    delta_nu: float
    lower_bound_value: float
    """``sqrt(A_v / B_u) delta_nu**(mu/(mu+1)) rho**(1/(mu+1))``."""
    image_norm: float
    x_norm: float
    norm_floor: float
    """``kappa_nu**mu rho / sqrt(B_u)``, the bound on ``||x_nu||`` valid without extra assumptions."""
    lower_constant: float
    upper_constant: float
    """``sqrt(B_v / A_u)``, reported alongside the lower-bound constant ``sqrt(A_v / B_u)``."""

    @property
    def image_ok(self) -> bool:
        return self.image_norm <= self.delta_nu * (1 + 1e-10)

    @property
    def norm_floor_ok(self) -> bool:
        return self.x_norm >= self.norm_floor * (1 - 1e-10)

    @property
    def lower_bound_ok(self) -> bool:
        return self.x_norm >= self.lower_bound_value * (1 - 1e-10)


def optimality_witness(dfd: DiagonalFrameDecomposition, mu: float, rho: float, nu) -> OptimalityWitness:
    """Witness element for the lower bound on the intrinsic error over the source set.

    Raises
    ------
    NotRieszError
        If ``u`` has no biorthogonal dual.
    """
    if not dfd.is_riesz:
        raise NotRieszError(
            f"u is not a Riesz basis (biorthogonality residual {dfd.biorthogonality_residual:.3e}); "
            "the witness needs a biorthogonal sequence of u"
        )
    if mu < 0 or rho <= 0:
        raise ValueError("mu must be nonnegative and rho positive")
    i = dfd.labels.index(str(nu))
    k = float(dfd.kappa[i])
    A_u, B_u = dfd.bounds_u.lower, dfd.bounds_u.upper
    A_v, B_v = dfd.bounds_v.lower, dfd.bounds_v.upper
    x = rho * k**mu * dfd.u_dual.vectors[i]
    delta = rho * k ** (mu + 1) / np.sqrt(A_v)
    lower_c = np.sqrt(A_v / B_u)
    lb = lower_c * delta ** (mu / (mu + 1)) * rho ** (1 / (mu + 1))
    return OptimalityWitness(
        dfd.labels[i],
        k,
        x,
        float(delta),
        float(lb),
        float(np.linalg.norm(dfd.operator.apply(x))),
        float(np.linalg.norm(x)),
        float(k**mu * rho / np.sqrt(B_u)),
        float(lower_c),
        float(np.sqrt(B_v / A_u)),
    )


def _sphere_sources(dfd: DiagonalFrameDecomposition, mu: float, rho: float, samples: int, g) -> np.ndarray:
    # columns are source elements with ||omega|| = rho
    L = len(dfd)
    W = np.column_stack([g.standard_normal(L) for _ in range(samples)])
    W *= rho / np.linalg.norm(W, axis=0)
    kmu = (dfd.kappa**mu)[:, None]
    if dfd.is_riesz:
        return dfd.u_dual.vectors.T @ (kmu * W)
    # overcomplete: realizable part of each request, put back on the sphere
    X, *_ = np.linalg.lstsq(dfd.u.vectors, kmu * W, rcond=None)
    Wr = (dfd.u.vectors @ X) / kmu
    return X * (rho / np.linalg.norm(Wr, axis=0))


def empirical_worst_case(
    method: Callable[[np.ndarray], np.ndarray],
    dfd: DiagonalFrameDecomposition,
    mu: float,
    rho: float,
    delta: float,
    samples: int = 100,
    seed: int = 0,
    include_witnesses: bool = True,
) -> float:
    """Sampled lower bound on the worst-case error ``sup ||method(Kx + z) - x||``.

    ``x`` ranges over random source elements with ``||omega|| = rho`` and, for
    Riesz decompositions, the witnesses ``x_nu`` paired with the adversarial
    noise ``-K x_nu`` shortened to norm ``delta``.  ``method`` must accept a
    2-D array of data columns.
    """
    if samples < 1:
        raise ValueError("samples must be at least 1")
    op = dfd.operator
    zero = np.asarray(method(np.zeros((op.shape[0], 1))))
    if np.max(np.abs(zero)) > 1e-12:
        raise ValueError("method(0) must be 0")
    g = Xoshiro256StarStar(seed)
    X = _sphere_sources(dfd, mu, rho, samples, g)
    Z = np.column_stack([noise_sample(op.shape[0], delta, "random_unit", rng=g) for _ in range(samples)])
    Y = op.apply(X) + Z
    if include_witnesses and dfd.is_riesz:
        Xw = rho * (dfd.kappa**mu)[:, None] * dfd.u_dual.vectors
        Xw = Xw.T
        KX = op.apply(Xw)
        n = np.linalg.norm(KX, axis=0)
        shrink = np.minimum(1.0, delta / np.maximum(n, 1e-300))
        X = np.hstack([X, Xw])
        Y = np.hstack([Y, KX * (1.0 - shrink)])
    R = np.asarray(method(Y)) - X
    return float(np.max(np.linalg.norm(R, axis=0)))
