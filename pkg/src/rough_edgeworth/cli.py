"""Command-line front end.

Every command reads a TOML config (``--config``) or a bundled preset
(``--preset``), applies flag overrides and writes CSV or JSON.  Exit codes:
0 success, 1 check failure, 2 usage or configuration error.
"""

from __future__ import annotations

import json
import math
import warnings
from contextlib import contextmanager
from typing import Any, Iterable, Sequence

import click
import numpy as np

from . import config as cfgmod
from .coeffs_rbergomi import coefficients as rb_coefficients
from .coeffs_regular import regular_coefficients
from .config import ConfigError, ModelKind, OutputFormat, RunConfig
from .errors import DomainError, EstimatorUnavailable, ExpansionDomainError, NumericalError, RegimeWarning
from .expansion import (
    ExpansionCoefficients,
    atm_curvature,
    atm_skew,
    density_normalization,
    density_q,
    implied_vol_expansion,
)
from .mc.appendix import Identity, check_identities
from .mc.pricing import mc_atm_skew, mc_smile

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG = 0, 1, 2

COLUMNS = {
    "coeffs": ["theta", "sigma0", "kappa2", "kappa3", "kappa4", "eta_theta_H", "regime_warning"],
    "smile": ["theta", "z", "k", "iv_expansion", "flag"],
    "mc-compare": ["theta", "z", "k", "iv_expansion", "iv_mc", "iv_mc_stderr", "abs_gap",
                   "gap_in_stderr", "flag"],
    "skew": ["theta", "skew_expansion", "curvature_expansion", "skew_mc", "skew_mc_stderr"],
    "density": ["theta", "x", "q_theta"],
    "check-appendix": ["identity", "kernel", "order", "analytic", "mc", "stderr", "z_score",
                       "max_abs_z", "pass"],
}

# Order carrying the leading Hermite coefficient of each identity.
LEADING_ORDER = {Identity.A1A: 1, Identity.A1B: 2, Identity.A1C: 3, Identity.A1D: 2, Identity.A2: 4}


class ConfigFailure(click.ClickException):
    exit_code = EXIT_CONFIG

    def show(self, file=None):
        click.echo(f"error: {self.format_message()}", err=True)


class CheckFailure(click.ClickException):
    exit_code = EXIT_CHECK_FAILED

    def show(self, file=None):
        click.echo(f"check failed: {self.format_message()}", err=True)


# ---------------------------------------------------------------------------
# output

def fmt_value(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        return f"{v:.17g}"
    return str(v)


def _json_value(v: Any) -> Any:
    if isinstance(v, np.floating):
        v = float(v)
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def render(columns: Sequence[str], rows: Iterable[Sequence[Any]], meta: Sequence[dict],
           fmt: OutputFormat) -> str:
    rows = list(rows)
    if fmt is OutputFormat.JSON:
        doc = {"columns": list(columns),
               "rows": [{c: _json_value(v) for c, v in zip(columns, r)} for r in rows],
               "meta": list(meta)}
        return json.dumps(doc, indent=2, sort_keys=False) + "\n"
    lines = [",".join(columns)]
    lines += [",".join(fmt_value(v) for v in r) for r in rows]
    lines += ["#meta " + json.dumps(m, sort_keys=True) for m in meta]
    return "\n".join(lines) + "\n"


def emit(cfg: RunConfig, command: str, rows, meta=()) -> None:
    text = render(COLUMNS[command], rows, list(meta), cfg.output_format)
    if cfg.output_path == "-":
        click.echo(text, nl=False)
    else:
        with open(cfg.output_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# config plumbing

def _parse_grid(spec: str | None) -> tuple[float, ...] | None:
    """``start:stop:num`` -> evenly spaced grid (endpoints included)."""
    if spec is None:
        return None
    parts = spec.split(":")
    try:
        if len(parts) != 3:
            raise ValueError
        start, stop, num = float(parts[0]), float(parts[1]), int(parts[2])
        if num < 1:
            raise ValueError
    except ValueError:
        raise ConfigFailure(f"grid {spec!r} must look like start:stop:num with num >= 1") from None
    return tuple(float(v) for v in np.linspace(start, stop, num))


def common_options(fn):
    opts = [
        click.option("--config", "config_path", type=click.Path(dir_okay=False),
                     help="TOML run configuration."),
        click.option("--preset", type=click.Choice(cfgmod.PRESETS),
                     help="Bundled parameter set (ignored when --config is given)."),
        click.option("--H", "H", type=float, help="Hurst parameter."),
        click.option("--eta", type=float, help="Vol-of-vol."),
        click.option("--rho", type=float, help="Spot/vol correlation."),
        click.option("--v0", type=float, help="Flat forward variance (replaces the curve)."),
        click.option("--curve-file", type=click.Path(dir_okay=False),
                     help="Forward variance CSV with header t_break,v0."),
        click.option("--theta", "theta", type=float, multiple=True, help="Maturity; repeatable."),
        click.option("--z", "z", type=float, multiple=True, help="Smile point; repeatable."),
        click.option("--z-grid", help="Smile grid start:stop:num."),
        click.option("--x-grid", help="Density grid start:stop:num."),
        click.option("--n-paths", type=int),
        click.option("--n-steps", type=int),
        click.option("--seed", type=int),
        click.option("--estimator", type=click.Choice(["conditional_gaussian", "euler"])),
        click.option("--antithetic/--no-antithetic", default=None),
        click.option("-o", "--output", help="Output file ('-' for stdout)."),
        click.option("--format", "fmt", type=click.Choice(["csv", "json"])),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def build_config(config_path=None, preset=None, z_grid=None, x_grid=None, **flags) -> RunConfig:
    try:
        if config_path is not None:
            base = cfgmod.load(config_path)
        elif preset is not None:
            base = cfgmod.load_preset(preset)
        else:
            base = cfgmod.load_preset("fig1-left")
        grid_z = _parse_grid(z_grid)
        if grid_z is not None:
            flags["z"] = tuple(flags.get("z") or ()) + grid_z
        grid_x = _parse_grid(x_grid)
        if grid_x is not None:
            flags["x"] = grid_x
        return cfgmod.with_overrides(base, **flags)
    except ConfigError as exc:
        raise ConfigFailure(str(exc)) from None


@contextmanager
def config_errors():
    """Map domain errors raised while computing to the configuration exit code."""
    try:
        yield
    except (DomainError, EstimatorUnavailable) as exc:
        raise ConfigFailure(str(exc)) from None


def expansion_coefficients(cfg: RunConfig, theta: float) -> ExpansionCoefficients:
    if cfg.model is ModelKind.ROUGH_BERGOMI:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RegimeWarning)
            return rb_coefficients(cfg.rough_bergomi.params(), theta, warn=False)
    rs = cfg.regular_sv
    return regular_coefficients(rs.inputs(), theta, kappa2_correction=rs.kappa2_correction)


def _require_z(cfg: RunConfig) -> None:
    if not cfg.z:
        raise ConfigFailure("config field 'z': smile grid must be nonempty (use --z or --z-grid)")


def _require_mc(cfg: RunConfig, what: str):
    if cfg.mc is None:
        raise ConfigFailure(f"config field 'mc': {what} needs an [mc] section or --n-paths")
    return cfg.mc


def _require_rough(cfg: RunConfig, what: str):
    if cfg.model is not ModelKind.ROUGH_BERGOMI:
        raise ConfigFailure(f"config field 'model': {what} simulates the rough Bergomi model only")
    return cfg.rough_bergomi.params()


# ---------------------------------------------------------------------------
# commands

@click.group()
@click.version_option(package_name="rough-edgeworth")
def main():
    """Small-time expansions for rough and regular stochastic volatility."""


@main.command("coeffs")
@common_options
def cmd_coeffs(**kw):
    """Coefficient table (sigma0, kappa2, kappa3, kappa4, regime flag) per maturity."""
    cfg = build_config(**kw)
    rows = []
    with config_errors():
        for th in cfg.theta:
            c = expansion_coefficients(cfg, th)
            if c.regime_warning:
                click.echo(f"warning: eta*theta^H = {c.eta_theta_h:.4g} >= 1 at theta={th}", err=True)
            rows.append([th, c.sigma0, c.kappa2, c.kappa3, c.kappa4, c.eta_theta_h, c.regime_warning])
    emit(cfg, "coeffs", rows)


def _iv_or_flag(c: ExpansionCoefficients, z: float):
    try:
        return implied_vol_expansion(c, z), ""
    except ExpansionDomainError:
        return None, "expansion_out_of_domain"


@main.command("smile")
@common_options
def cmd_smile(**kw):
    """Expansion implied volatility on the (theta, z) grid."""
    cfg = build_config(**kw)
    _require_z(cfg)
    rows = []
    with config_errors():
        for th in cfg.theta:
            c = expansion_coefficients(cfg, th)
            st = math.sqrt(th)
            for z in cfg.z:
                iv, flag = _iv_or_flag(c, z)
                rows.append([th, z, st * z, iv, flag])
    emit(cfg, "smile", rows)


def compare_rows(cfg: RunConfig, theta: float):
    """Rows and summary of an expansion-vs-Monte-Carlo smile at one maturity."""
    params = cfg.rough_bergomi.params()
    c = expansion_coefficients(cfg, theta)
    points = mc_smile(params, cfg.mc, theta, cfg.z)
    rows, gaps = [], []
    for z, pt in zip(cfg.z, points):
        iv_e, flag = _iv_or_flag(c, z)
        gap = gap_se = None
        if pt.iv is None:
            flag = flag + ";mc_out_of_bounds" if flag else "mc_out_of_bounds"
        elif iv_e is not None:
            gap = abs(iv_e - pt.iv)
            gap_se = gap / pt.stderr if pt.stderr and pt.stderr > 0 else math.inf
            gaps.append(gap)
        rows.append([theta, z, pt.k, iv_e, pt.iv, pt.stderr, gap, gap_se, flag])
    summary = {"theta": theta, "n_points": len(rows), "n_compared": len(gaps),
               "max_abs_gap": max(gaps) if gaps else None,
               "mean_abs_gap": float(np.mean(gaps)) if gaps else None}
    return rows, summary


@main.command("mc-compare")
@common_options
def cmd_mc_compare(**kw):
    """Expansion vs Monte Carlo implied volatility, one block per maturity."""
    cfg = build_config(**kw)
    _require_z(cfg)
    _require_mc(cfg, "mc-compare")
    _require_rough(cfg, "mc-compare")
    rows, meta = [], []
    with config_errors():
        for th in cfg.theta:
            r, s = compare_rows(cfg, th)
            rows += r
            meta.append(s)
    emit(cfg, "mc-compare", rows, meta)


def power_law_fit(theta: Sequence[float], skew: Sequence[float]) -> dict:
    """Least-squares fit of ``log|skew| = intercept + slope log(theta)``; H = slope + 1/2."""
    t = np.asarray(theta, dtype=float)
    s = np.abs(np.asarray(skew, dtype=float))
    if t.size < 3 or np.any(s <= 0) or not np.all(np.isfinite(s)):
        return {"slope": None, "intercept": None, "implied_H": None}
    slope, intercept = np.polyfit(np.log(t), np.log(s), 1)
    return {"slope": float(slope), "intercept": float(intercept), "implied_H": float(slope + 0.5)}


@main.command("skew")
@common_options
@click.option("--mc/--no-mc", "with_mc", default=False, help="Add Monte Carlo skew estimates.")
@click.option("--fit/--no-fit", default=True, help="Log-log power-law fit in the footer.")
def cmd_skew(with_mc: bool, fit: bool, **kw):
    """ATM skew and curvature term structure with a power-law fit."""
    cfg = build_config(**kw)
    if fit and len(cfg.theta) < 3:
        raise ConfigFailure("config field 'theta': the power-law fit needs at least 3 maturities")
    if with_mc:
        mc = _require_mc(cfg, "skew --mc")
        params = _require_rough(cfg, "skew --mc")
    rows, skew_e, skew_m = [], [], []
    with config_errors():
        for th in cfg.theta:
            c = expansion_coefficients(cfg, th)
            s_mc = s_err = None
            if with_mc:
                s_mc, s_err = mc_atm_skew(params, mc, th)
                skew_m.append(s_mc)
            skew_e.append(atm_skew(c))
            rows.append([th, atm_skew(c), atm_curvature(c), s_mc, s_err])
    meta = []
    if fit:
        meta.append({"fit": "expansion", **power_law_fit(cfg.theta, skew_e)})
        if with_mc:
            meta.append({"fit": "mc", **power_law_fit(cfg.theta, skew_m)})
    emit(cfg, "skew", rows, meta)


@main.command("density")
@common_options
def cmd_density(**kw):
    """Expansion density of the normalized log-price with a normalization footer."""
    cfg = build_config(**kw)
    if not cfg.x:
        raise ConfigFailure("config field 'x': density grid must be nonempty (use --x-grid)")
    rows, meta = [], []
    with config_errors():
        for th in cfg.theta:
            c = expansion_coefficients(cfg, th)
            q = density_q(c, np.asarray(cfg.x))
            rows += [[th, x, float(v)] for x, v in zip(cfg.x, q)]
            meta.append({"theta": th, "normalization": density_normalization(c)})
    emit(cfg, "density", rows, meta)


@main.command("check-appendix")
@common_options
@click.option("--kernel", type=click.Choice(["constant", "power", "zero"]),
              help="Kernel f: 1, (t-s)^(H-1/2) or 0.")
@click.option("--kernel-H", "kernel_H", type=float, help="H of the power kernel.")
def cmd_check_appendix(**kw):
    """Hermite-projection Monte Carlo checks of the conditional-expectation identities."""
    cfg = build_config(**kw)
    mc = _require_mc(cfg, "check-appendix")
    ap = cfg.appendix or cfgmod.AppendixSection()
    kernel = ap.volterra_kernel()
    with config_errors(), warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            results = check_identities(ap.identities, kernel, mc)
        except NumericalError as exc:
            raise ConfigFailure(str(exc)) from None
    for w in caught:
        click.echo(f"warning: {w.message}", err=True)
    rows, meta, failed = [], [], []
    for r in results:
        k = LEADING_ORDER[r.kind]
        rows.append([r.kind.value, ap.kernel, k, r.analytic[k], r.estimate[k], r.stderr[k],
                     float(r.z_scores[k]), r.max_abs_z, r.passed])
        meta.append({"identity": r.kind.value, "analytic": r.analytic.tolist(),
                     "mc": r.estimate.tolist(), "stderr": r.stderr.tolist(),
                     "discrete": r.discrete.tolist()})
        if not r.passed:
            failed.append(r.kind.value)
    emit(cfg, "check-appendix", rows, meta)
    if failed:
        raise CheckFailure(f"identities failing at 4 sigma: {', '.join(failed)}")


@main.command("dump-config")
@common_options
def cmd_dump_config(**kw):
    """Print the effective configuration (file + overrides) in canonical TOML."""
    cfg = build_config(**kw)
    click.echo(cfg.to_toml(), nl=False)


if __name__ == "__main__":  # pragma: no cover
    main()
