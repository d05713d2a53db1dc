"""Command-line front end: ``dfdreg {validate,invert,rates,witness}``.

Exit codes: 0 success, 1 a check failed, 2 bad input (config, flags, files).
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, load_config, with_overrides
from .dfd import (
    DecompositionError,
    DiagonalFrameDecomposition,
    illposedness_report,
    pseudo_inverse_via_dfd,
    validate_quasi_singular,
)
from .filters import parse_filter_spec
from .formats import FormatError, read_vector, write_rates_csv, write_vector
from .frames import FrameError, check_duality, estimate_frame_bounds
from .problems import build_dfd
from .rates import (
    NotRieszError,
    RateStudyConfig,
    UnqualifiedFilterError,
    optimality_witness,
    rate_bound,
    run_rate_study,
)
from .regularize import FilteredDfdOperator, apriori_choice, filtered_apply

EXACT_FILTER = "exact"


class InputError(Exception):
    """Exit code 2."""


class CheckFailure(Exception):
    """Exit code 1."""


def _header(cfg: RunConfig, command: str) -> list[str]:
    return [f"dfdreg {__version__}", f"command = {command}", *cfg.lines(), ""]


def _g(x) -> str:
    return "%.17g" % x


def _write_text(path: Path, header: list[str], body: list[str]) -> None:
    text = "".join(f"# {h}\n" if h else "#\n" for h in header) + "".join(line + "\n" for line in body)
    path.write_text(text)


def _load_dfd(cfg: RunConfig) -> DiagonalFrameDecomposition:
    try:
        return build_dfd(cfg.problem, cfg.N, cfg.dfd, cfg.path, cfg.v_path)
    except (DecompositionError, FrameError) as exc:
        raise CheckFailure(f"decomposition rejected: {exc}") from exc
    except (FormatError, OSError) as exc:
        raise InputError(str(exc)) from exc
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _filter(cfg: RunConfig):
    try:
        return parse_filter_spec(cfg.filter)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def cmd_validate(cfg: RunConfig, out: Path) -> int:
    header = _header(cfg, "validate")
    try:
        dfd = _load_dfd(cfg)
    except CheckFailure as exc:
        _write_text(out / "validate.txt", header, [f"error: {exc}", "verdict: FAIL"])
        raise
    lines = [f"decomposition: {dfd.name}", f"labels: {len(dfd)}", f"operator_shape: {dfd.operator.shape}"]
    ok = True
    qs = validate_quasi_singular(dfd, rng=cfg.seed)
    ok &= qs.passed
    lines += [
        f"quasi_singular_elementwise_residual: {_g(qs.elementwise_residual)} (worst label {qs.worst_label})",
        f"quasi_singular_operator_residual: {_g(qs.operator_residual)}",
        f"quasi_singular_tolerance: {_g(qs.tolerance)}",
        f"quasi_singular: {'PASS' if qs.passed else 'FAIL'}",
    ]
    for name, frame, basis in (
        ("u", dfd.u, dfd.coimage_basis),
        ("v", dfd.v, dfd.range_basis),
        ("u_dual", dfd.u_dual, dfd.coimage_basis),
    ):
        try:
            b = frame.bounds or estimate_frame_bounds(frame, basis)
            lines.append(f"bounds_{name}: A={_g(b.lower)} B={_g(b.upper)} ({b.method})")
        except FrameError as exc:
            ok = False
            lines.append(f"bounds_{name}: FAIL ({exc})")
    dual = check_duality(dfd.u, dfd.u_dual, subspace=dfd.coimage_basis, rng=cfg.seed)
    ok &= dual.passed
    lines += [f"duality_residual: {_g(dual.max_residual)}", f"duality: {'PASS' if dual.passed else 'FAIL'}"]
    lines.append(f"riesz_basis: {dfd.is_riesz} (biorthogonality residual {_g(dfd.biorthogonality_residual)})")
    ill = illposedness_report(dfd)
    lines += [
        f"kappa_inf: {_g(ill.inf_kappa)}",
        f"kappa_sup: {_g(ill.sup_kappa)}",
        f"kappa_inf_refined: {'n/a' if ill.refined_inf_kappa is None else _g(ill.refined_inf_kappa)}",
        f"kappa_sup_refined: {'n/a' if ill.refined_sup_kappa is None else _g(ill.refined_sup_kappa)}",
        f"illposedness: {ill.verdict}",
    ]
    for c in ill.clusters:
        lines.append(f"kappa_cluster: center={_g(c.center)} count={c.count} range=[{_g(c.low)}, {_g(c.high)}]")
    lines += [f"note: {n}" for n in ill.notes]
    lines.append(f"verdict: {'PASS' if ok else 'FAIL'}")
    _write_text(out / "validate.txt", header, lines)
    print(f"validate: {'PASS' if ok else 'FAIL'} ({dfd.name}, {ill.verdict})")
    return 0 if ok else 1


def cmd_invert(cfg: RunConfig, out: Path) -> int:
    if not cfg.data:
        raise InputError("invert needs a data vector (--data or invert.data)")
    dfd = _load_dfd(cfg)
    try:
        y = read_vector(cfg.data)
        truth = read_vector(cfg.truth) if cfg.truth else None
    except (FormatError, OSError) as exc:
        raise InputError(str(exc)) from exc
    m, n = dfd.operator.shape
    if y.shape != (m,):
        raise InputError(f"data has dimension {y.size}, operator range is R^{m}")
    if truth is not None and truth.shape != (n,):
        raise InputError(f"ground truth has dimension {truth.size}, operator domain is R^{n}")
    if cfg.filter.strip().strip('"') == EXACT_FILTER:
        x, alpha = pseudo_inverse_via_dfd(dfd, y), 0.0
    else:
        filt = _filter(cfg)
        if cfg.alpha is not None:
            alpha = cfg.alpha
        elif cfg.delta > 0:
            alpha = apriori_choice(cfg.delta, cfg.rho, cfg.mu, cfg.c)
        else:
            raise InputError("give choice.alpha or a positive invert.delta to fix alpha")
        try:
            x = filtered_apply(FilteredDfdOperator(dfd, filt, alpha), y)
        except ValueError as exc:
            raise InputError(str(exc)) from exc
    header = _header(cfg, "invert")
    write_vector(out / "x.txt", x, header)
    print(f"alpha_used: {_g(alpha)}")
    summary = [f"alpha_used: {_g(alpha)}"]
    if truth is not None:
        err = float(np.linalg.norm(x - truth))
        print(f"error: {_g(err)}")
        summary.append(f"error: {_g(err)}")
    _write_text(out / "invert.txt", header, summary)
    return 0


def cmd_rates(cfg: RunConfig, out: Path) -> int:
    dfd = _load_dfd(cfg)
    filt = _filter(cfg)
    try:
        study = RateStudyConfig(
            dfd,
            filt,
            cfg.mu,
            cfg.seed,
            cfg.rho,
            cfg.c,
            cfg.delta_grid(),
            cfg.noise_draws,
            source_ratio=cfg.source_ratio,
        )
        res = run_rate_study(study)
    except UnqualifiedFilterError as exc:
        raise CheckFailure(str(exc)) from exc
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    header = _header(cfg, "rates")
    write_rates_csv(out / "rates.csv", res.rows, header)
    ok = res.passed()
    lo, hi = res.deltas[res.fit_start], res.deltas[-1]
    summary = [
        f"seed: {cfg.seed}",
        f"fitted_slope: {_g(res.fitted_slope)}",
        f"slope_stderr: {_g(res.slope_stderr)}",
        f"target_slope: {_g(res.target_slope)}",
        "tolerance: 0.1",
        f"fit_range: delta in [{_g(hi)}, {_g(lo)}] ({len(res.rows) - res.fit_start} rows)",
        f"excluded_rows: {list(res.excluded)}",
        f"kappa_min: {_g(dfd.kappa.min())}",
        f"saturation_delta: {_g(res.saturation_delta)} (alpha(delta) = kappa_min)",
        "presaturation_slope: "
        + ("n/a" if res.presaturation_slope is None else _g(res.presaturation_slope)),
        f"result: {'PASS' if ok else 'FAIL'}",
    ]
    _write_text(out / "rates_summary.txt", header, summary)
    print(f"rates: slope {res.fitted_slope:.4f} vs target {res.target_slope:.4f}: {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def cmd_witness(cfg: RunConfig, out: Path) -> int:
    dfd = _load_dfd(cfg)
    if not dfd.is_riesz:
        raise CheckFailure(
            f"{dfd.name}: u has no biorthogonal sequence (residual {dfd.biorthogonality_residual:.3g}); "
            "the optimality witness requires a Riesz basis"
        )
    filt = _filter(cfg)
    qualified = filt.claimed_constant(cfg.mu) is not None
    lo = cfg.witness_delta_min if cfg.witness_delta_min is not None else 0.0
    hi = cfg.witness_delta_max if cfg.witness_delta_max is not None else math.inf
    rows, ok = [], True
    for label in dfd.labels:
        w = optimality_witness(dfd, cfg.mu, cfg.rho, label)
        if not lo <= w.delta_nu <= hi:
            continue
        if qualified:
            env = rate_bound(dfd, filt, apriori_choice(w.delta_nu, cfg.rho, cfg.mu, cfg.c), w.delta_nu, cfg.mu, cfg.rho)
        else:
            env = math.nan
        row_ok = w.image_ok and w.norm_floor_ok and w.lower_bound_ok
        if qualified:
            row_ok &= env >= w.lower_bound_value * (1 - 1e-10)
        ok &= row_ok
        rows.append((w.nu, w.kappa, w.delta_nu, w.x_norm, w.lower_bound_value, env, row_ok))
    header = _header(cfg, "witness")
    body = ["nu,kappa,delta_nu,x_norm,lower_bound,upper_envelope"]
    body += [",".join([r[0], *(_g(v) for v in r[1:6])]) for r in rows]
    _write_text(out / "witness.csv", header, body)
    B = dfd.bounds_u, dfd.bounds_v
    summary = [
        f"rows: {len(rows)}",
        f"lower_bound_constant sqrt(A_v/B_u): {_g(math.sqrt(B[1].lower / B[0].upper))}",
        f"upper_constant sqrt(B_v/A_u): {_g(math.sqrt(B[1].upper / B[0].lower))}",
        f"upper_envelope: {'rate bound of ' + filt.name if qualified else 'n/a (filter not qualified)'}",
        f"failed_rows: {[r[0] for r in rows if not r[6]]}",
        f"result: {'PASS' if ok else 'FAIL'}",
    ]
    _write_text(out / "witness_summary.txt", header, summary)
    print(f"witness: {len(rows)} rows: {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


COMMANDS = {"validate": cmd_validate, "invert": cmd_invert, "rates": cmd_rates, "witness": cmd_witness}


def _add_globals(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--config", metavar="PATH", default=d, help="run configuration file")
    p.add_argument("--out", metavar="DIR", default=d, help="output directory")
    p.add_argument("--seed", metavar="U64", type=int, default=d, help="override run.seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dfdreg", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"dfdreg {__version__}")
    _add_globals(parser, False)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        _add_globals(sp, True)
        if name == "invert":
            sp.add_argument("--data", metavar="PATH")
            sp.add_argument("--truth", metavar="PATH")
            sp.add_argument("--delta", type=float)
            sp.add_argument("--alpha", type=float)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        cfg = with_overrides(
            cfg,
            seed=args.seed,
            out=args.out,
            data=getattr(args, "data", None),
            truth=getattr(args, "truth", None),
            delta=getattr(args, "delta", None),
            alpha=getattr(args, "alpha", None),
        )
        if not 0 <= cfg.seed < 2**64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, out)
    except (ConfigError, InputError) as exc:
        print(f"dfdreg: error: {exc}", file=sys.stderr)
        return 2
    except (CheckFailure, NotRieszError) as exc:
        print(f"dfdreg: check failed: {exc}", file=sys.stderr)
        return 1
