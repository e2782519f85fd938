"""Run configuration: a TOML file with an optional layer of command-line overrides.

Canonical schema::

    model = "rough_bergomi"            # or "regular_sv"
    theta = [0.02, 0.05]               # maturities, all > 0
    z = [-1.0, 0.0, 1.0]               # smile grid, k = sqrt(theta) * z
    x = [-3.0, 0.0, 3.0]               # density grid (normalized log-price)

    [rough_bergomi]
    H = 0.07
    eta = 0.9
    rho = -0.9
    curve_file = "curve.csv"           # optional; columns t_break,v0

    [[curve]]                          # inline alternative to curve_file
    t = 0.0
    v = 0.04

    [regular_sv]
    preset = "heston"                  # heston | lognormal_sabr | lognormal_variance
    kappa2_correction = false
    [regular_sv.params]
    v0 = 0.04
    kappa = 1.0
    theta_bar = 0.04
    xi = 0.5
    rho = -0.7

    [mc]
    n_paths = 200000
    n_steps = 256
    seed = 20240101
    estimator = "conditional_gaussian"  # or "euler"
    antithetic = false

    [appendix]
    kernel = "power"                   # constant | power | zero
    H = 0.07
    identities = ["A1a", "A1b", "A1c", "A1d", "A2"]

    [output]
    path = "-"                         # "-" is stdout
    format = "csv"                     # or "json"

Serializing a parsed config always writes the curve inline, so
parse -> serialize -> parse is the identity.
"""

from __future__ import annotations

import csv
import enum
import io
import math
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .coeffs_rbergomi import ForwardVarianceCurve, RoughBergomiParams
from .coeffs_regular import Preset, RegularSVInputs, preset as regular_preset
from .errors import DomainError
from .mc.appendix import Identity, kernel_constant, kernel_power, kernel_zero
from .mc.covariance import VolterraKernel
from .mc.engine import Estimator, MCConfig

PRESETS = ("fig1-left", "fig1-right", "fig2-left", "fig2-right", "lognormal-bridge")


class ConfigError(ValueError):
    """Malformed configuration; the message names the offending line or field."""


class ModelKind(enum.Enum):
    ROUGH_BERGOMI = "rough_bergomi"
    REGULAR_SV = "regular_sv"


class OutputFormat(enum.Enum):
    CSV = "csv"
    JSON = "json"


@dataclass(frozen=True)
class RoughBergomiSection:
    H: float
    eta: float
    rho: float
    curve: tuple[tuple[float, float], ...]

    def params(self) -> RoughBergomiParams:
        t, v = zip(*self.curve)
        return RoughBergomiParams(H=self.H, eta=self.eta, rho=self.rho,
                                  curve=ForwardVarianceCurve(t, v))


@dataclass(frozen=True)
class RegularSVSection:
    preset: Preset
    params: tuple[tuple[str, float], ...]
    kappa2_correction: bool = False

    def inputs(self) -> RegularSVInputs:
        return regular_preset(self.preset, **dict(self.params))


@dataclass(frozen=True)
class AppendixSection:
    kernel: str = "power"
    H: float = 0.07
    identities: tuple[Identity, ...] = tuple(Identity)

    def volterra_kernel(self) -> VolterraKernel:
        if self.kernel == "constant":
            return kernel_constant()
        if self.kernel == "zero":
            return kernel_zero()
        return kernel_power(self.H)


@dataclass(frozen=True)
class RunConfig:
    model: ModelKind
    theta: tuple[float, ...]
    z: tuple[float, ...] = ()
    x: tuple[float, ...] = ()
    rough_bergomi: RoughBergomiSection | None = None
    regular_sv: RegularSVSection | None = None
    mc: MCConfig | None = None
    appendix: AppendixSection | None = None
    output_path: str = "-"
    output_format: OutputFormat = OutputFormat.CSV

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"model": self.model.value, "theta": list(self.theta)}
        if self.z:
            out["z"] = list(self.z)
        if self.x:
            out["x"] = list(self.x)
        if self.rough_bergomi is not None:
            rb = self.rough_bergomi
            out["rough_bergomi"] = {"H": rb.H, "eta": rb.eta, "rho": rb.rho}
            out["curve"] = [{"t": t, "v": v} for t, v in rb.curve]
        if self.regular_sv is not None:
            rs = self.regular_sv
            out["regular_sv"] = {"preset": rs.preset.value,
                                 "kappa2_correction": rs.kappa2_correction,
                                 "params": dict(rs.params)}
        if self.mc is not None:
            out["mc"] = {"n_paths": self.mc.n_paths, "n_steps": self.mc.n_steps,
                         "seed": self.mc.seed, "estimator": self.mc.estimator.value,
                         "antithetic": self.mc.antithetic}
        if self.appendix is not None:
            ap = self.appendix
            out["appendix"] = {"kernel": ap.kernel, "H": ap.H,
                               "identities": [i.value for i in ap.identities]}
        out["output"] = {"path": self.output_path, "format": self.output_format.value}
        return out

    def to_toml(self) -> str:
        return tomli_w.dumps(self.to_dict())


# ---------------------------------------------------------------------------
# parsing helpers

def _err(path: str, msg: str) -> ConfigError:
    return ConfigError(f"config field '{path}': {msg}")


def _number(d: dict, key: str, path: str, default: Any = ...) -> float:
    if key not in d:
        if default is ...:
            raise _err(f"{path}{key}", "missing")
        return default
    val = d[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise _err(f"{path}{key}", f"expected a number, got {val!r}")
    val = float(val)
    if not math.isfinite(val):
        raise _err(f"{path}{key}", "must be finite")
    return val


def _int(d: dict, key: str, path: str, default: int) -> int:
    val = d.get(key, default)
    if isinstance(val, bool) or not isinstance(val, int):
        raise _err(f"{path}{key}", f"expected an integer, got {val!r}")
    return val


def _numbers(d: dict, key: str) -> tuple[float, ...]:
    val = d.get(key, [])
    if not isinstance(val, list):
        raise _err(key, f"expected a list of numbers, got {val!r}")
    out = []
    for i, item in enumerate(val):
        if isinstance(item, bool) or not isinstance(item, (int, float)) or not math.isfinite(item):
            raise _err(f"{key}[{i}]", f"expected a finite number, got {item!r}")
        out.append(float(item))
    return tuple(out)


def _table(d: dict, key: str) -> dict | None:
    val = d.get(key)
    if val is None:
        return None
    if not isinstance(val, dict):
        raise _err(key, "expected a table")
    return val


def read_curve_csv(path: Path) -> tuple[tuple[float, float], ...]:
    """Two-column curve file with the header ``t_break,v0``."""
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"curve file {path}: {exc.strerror}") from None
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [c.strip() for c in rows[0]] != ["t_break", "v0"]:
        raise ConfigError(f"curve file {path}, line 1: header must be 't_break,v0'")
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            raise ConfigError(f"curve file {path}, line {lineno}: expected 2 columns, got {len(row)}")
        try:
            out.append((float(row[0]), float(row[1])))
        except ValueError:
            raise ConfigError(f"curve file {path}, line {lineno}: not a number: {row!r}") from None
    if not out:
        raise ConfigError(f"curve file {path}: no data rows")
    return tuple(out)


def _inline_curve(raw: Any) -> tuple[tuple[float, float], ...]:
    if not isinstance(raw, list) or not raw:
        raise _err("curve", "expected a nonempty array of tables with keys t and v")
    out = []
    for i, rec in enumerate(raw):
        if not isinstance(rec, dict):
            raise _err(f"curve[{i}]", "expected a table with keys t and v")
        out.append((_number(rec, "t", f"curve[{i}]."), _number(rec, "v", f"curve[{i}].")))
    return tuple(out)


def _validate_curve(curve) -> None:
    t, v = zip(*curve)
    try:
        ForwardVarianceCurve(t, v)
    except DomainError as exc:
        raise _err("curve", str(exc)) from None


def _rough_bergomi(doc: dict, base: Path | None) -> RoughBergomiSection:
    sec = _table(doc, "rough_bergomi")
    if sec is None:
        raise _err("rough_bergomi", "missing section for model 'rough_bergomi'")
    p = "rough_bergomi."
    if "curve" in doc and "curve_file" in sec:
        raise _err("curve", "give either [[curve]] records or rough_bergomi.curve_file, not both")
    if "curve_file" in sec:
        cf = Path(sec["curve_file"])
        if base is not None and not cf.is_absolute():
            cf = base / cf
        curve = read_curve_csv(cf)
    elif "curve" in doc:
        curve = _inline_curve(doc["curve"])
    elif "v0" in sec:
        curve = ((0.0, _number(sec, "v0", p)),)
    else:
        raise _err("curve", "missing: supply [[curve]] records, rough_bergomi.curve_file or rough_bergomi.v0")
    _validate_curve(curve)
    out = RoughBergomiSection(H=_number(sec, "H", p), eta=_number(sec, "eta", p),
                              rho=_number(sec, "rho", p), curve=curve)
    try:
        out.params()
    except DomainError as exc:
        raise _err("rough_bergomi", str(exc)) from None
    return out


def _regular_sv(doc: dict) -> RegularSVSection:
    sec = _table(doc, "regular_sv")
    if sec is None:
        raise _err("regular_sv", "missing section for model 'regular_sv'")
    try:
        name = Preset(sec.get("preset"))
    except ValueError:
        choices = ", ".join(p.value for p in Preset)
        raise _err("regular_sv.preset", f"expected one of {choices}, got {sec.get('preset')!r}") from None
    params_raw = _table(sec, "params") or {}
    params = tuple((k, _number(params_raw, k, "regular_sv.params.")) for k in sorted(params_raw))
    corr = sec.get("kappa2_correction", False)
    if not isinstance(corr, bool):
        raise _err("regular_sv.kappa2_correction", f"expected true/false, got {corr!r}")
    out = RegularSVSection(preset=name, params=params, kappa2_correction=corr)
    try:
        out.inputs()
    except DomainError as exc:
        raise _err("regular_sv.params", str(exc)) from None
    return out


def _mc(sec: dict) -> MCConfig:
    p = "mc."
    est = sec.get("estimator", Estimator.CONDITIONAL_GAUSSIAN.value)
    try:
        est = Estimator(est)
    except ValueError:
        raise _err("mc.estimator", f"expected 'euler' or 'conditional_gaussian', got {est!r}") from None
    anti = sec.get("antithetic", False)
    if not isinstance(anti, bool):
        raise _err("mc.antithetic", f"expected true/false, got {anti!r}")
    try:
        return MCConfig(n_paths=_int(sec, "n_paths", p, 100_000), n_steps=_int(sec, "n_steps", p, 256),
                        seed=_int(sec, "seed", p, 20240101), estimator=est, antithetic=anti)
    except DomainError as exc:
        raise _err("mc", str(exc)) from None


def _appendix(sec: dict) -> AppendixSection:
    kernel = sec.get("kernel", "power")
    if kernel not in ("constant", "power", "zero"):
        raise _err("appendix.kernel", f"expected constant, power or zero, got {kernel!r}")
    H = _number(sec, "H", "appendix.", 0.07)
    if not 0.0 < H <= 1.0:
        raise _err("appendix.H", f"kernel exponent H - 1/2 needs 0 < H, got {H}")
    ids = sec.get("identities", [i.value for i in Identity])
    try:
        idents = tuple(Identity(i) for i in ids)
    except ValueError as exc:
        raise _err("appendix.identities", str(exc)) from None
    if not idents:
        raise _err("appendix.identities", "empty")
    return AppendixSection(kernel=kernel, H=H, identities=idents)


def from_dict(doc: dict, base: Path | None = None) -> RunConfig:
    """Validate a decoded TOML document; ``base`` resolves relative curve files."""
    known = {"model", "theta", "z", "x", "rough_bergomi", "curve", "regular_sv", "mc",
             "appendix", "output"}
    extra = sorted(set(doc) - known)
    if extra:
        raise _err(extra[0], "unknown key")
    try:
        model = ModelKind(doc.get("model", ModelKind.ROUGH_BERGOMI.value))
    except ValueError:
        raise _err("model", f"expected 'rough_bergomi' or 'regular_sv', got {doc.get('model')!r}") from None
    theta = _numbers(doc, "theta")
    if not theta:
        raise _err("theta", "theta list must be nonempty")
    for i, th in enumerate(theta):
        if not th > 0:
            raise _err(f"theta[{i}]", f"must be positive, got {th}")
    rb = _rough_bergomi(doc, base) if model is ModelKind.ROUGH_BERGOMI else None
    rs = _regular_sv(doc) if model is ModelKind.REGULAR_SV else None
    mc_sec = _table(doc, "mc")
    ap_sec = _table(doc, "appendix")
    out_sec = _table(doc, "output") or {}
    fmt = out_sec.get("format", "csv")
    try:
        fmt = OutputFormat(fmt)
    except ValueError:
        raise _err("output.format", f"expected 'csv' or 'json', got {fmt!r}") from None
    path = out_sec.get("path", "-")
    if not isinstance(path, str) or not path:
        raise _err("output.path", "expected a nonempty string")
    return RunConfig(
        model=model, theta=theta, z=_numbers(doc, "z"), x=_numbers(doc, "x"),
        rough_bergomi=rb, regular_sv=rs,
        mc=_mc(mc_sec) if mc_sec is not None else None,
        appendix=_appendix(ap_sec) if ap_sec is not None else None,
        output_path=path, output_format=fmt,
    )


def parse_toml(text: str, base: Path | None = None) -> RunConfig:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config syntax error: {exc}") from None
    return from_dict(doc, base)


def load(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        return parse_toml(text, path.parent)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def preset_text(name: str) -> str:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return resources.files("rough_edgeworth.presets").joinpath(f"{name}.toml").read_text("utf-8")


def load_preset(name: str) -> RunConfig:
    return parse_toml(preset_text(name))


def with_overrides(cfg: RunConfig, **flags) -> RunConfig:
    """Apply command-line overrides (None means "not given"); flags win over the file."""
    doc = cfg.to_dict()
    def put(section: str, key: str, value):
        doc.setdefault(section, {})[key] = value

    for key in ("H", "eta", "rho"):
        if flags.get(key) is not None:
            if cfg.model is not ModelKind.ROUGH_BERGOMI:
                raise _err(f"rough_bergomi.{key}", "only valid for model 'rough_bergomi'")
            put("rough_bergomi", key, flags[key])
    rough_only = ("v0", "curve_file")
    if cfg.model is not ModelKind.ROUGH_BERGOMI and any(flags.get(k) is not None for k in rough_only):
        raise _err("curve", "only valid for model 'rough_bergomi'")
    if flags.get("v0") is not None:
        doc["curve"] = [{"t": 0.0, "v": flags["v0"]}]
    if flags.get("curve_file") is not None:
        doc.pop("curve", None)
        put("rough_bergomi", "curve_file", str(Path(flags["curve_file"]).resolve()))
    for key in ("theta", "z", "x"):
        if flags.get(key):
            doc[key] = list(flags[key])
    mc_keys = ("n_paths", "n_steps", "seed", "estimator", "antithetic")
    if any(flags.get(k) is not None for k in mc_keys):
        doc.setdefault("mc", {})
        for k in mc_keys:
            if flags.get(k) is not None:
                doc["mc"][k] = flags[k]
    for key, sec_key in (("kernel", "kernel"), ("kernel_H", "H")):
        if flags.get(key) is not None:
            put("appendix", sec_key, flags[key])
    if flags.get("output") is not None:
        put("output", "path", flags["output"])
    if flags.get("fmt") is not None:
        put("output", "format", flags["fmt"])
    return from_dict(doc)
