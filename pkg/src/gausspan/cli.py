"""Batch experiment runner.

Every subcommand resolves a flat config from three layers, lowest first:
built-in defaults, ``--config file.json``, explicit flags. The resolved
config and the package version are written as ``#`` lines at the top of
every CSV output (or as fields of the JSON output).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from . import bargmann as bg
from . import completeness_lab as lab
from . import fock_products as fp
from . import gaussian_kernel as gk
from . import lambda_sets as ls
from .numerics import QuadratureError, QuadratureSpec, SolveError
from .selftest import format_table, run_selftest

EXIT_OK, EXIT_SELFTEST, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2, 3


def artifact_version() -> str:
    try:
        from importlib.metadata import version

        return version("artifact")
    except Exception:  # not installed (e.g. run from a source tree)
        return "0.0.0+unknown"


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- parsing

_ANGLE = re.compile(r"^\s*([+-]?\d*\.?\d*)\s*\*?\s*pi\s*(?:/\s*(\d*\.?\d+))?\s*$")


def parse_angle(value) -> float:
    """Angle from a number or a literal like ``pi/4``, ``3pi/8``, ``-pi``."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    text = str(value).strip().lower()
    m = _ANGLE.match(text)
    if m:
        num, den = m.groups()
        if num in ("", "+"):
            k = 1.0
        elif num == "-":
            k = -1.0
        else:
            k = float(num)
        return k * math.pi / (float(den) if den else 1.0)
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"cannot parse angle {value!r}") from None


def _list_of(item: Callable[[Any], Any]) -> Callable[[Any], list]:
    def parse(value) -> list:
        if isinstance(value, str):
            parts = [p for p in value.split(",") if p.strip()]
        elif isinstance(value, (list, tuple)):
            parts = list(value)
        else:
            parts = [value]
        if not parts:
            raise ConfigError("empty list")
        return [item(p) for p in parts]

    return parse


def _number(value) -> float:
    if isinstance(value, bool):
        raise ConfigError("expected a number")
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"expected a number, got {value!r}") from None
    if not math.isfinite(out):
        raise ConfigError(f"expected a finite number, got {value!r}")
    return out


def _integer(value) -> int:
    if isinstance(value, bool):
        raise ConfigError("expected an integer")
    try:
        f = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"expected an integer, got {value!r}") from None
    if f != int(f):
        raise ConfigError(f"expected an integer, got {value!r}")
    return int(f)


def _window(value) -> list[float]:
    if isinstance(value, str):
        parts = value.split(":")
    else:
        parts = list(value)
    if len(parts) != 2:
        raise ConfigError(f"window must be 'r_min:r_max', got {value!r}")
    lo, hi = (_number(p) for p in parts)
    if not 0 < lo < hi:
        raise ConfigError("window must satisfy 0 < r_min < r_max")
    return [lo, hi]


def _choice(*options: str) -> Callable[[Any], str]:
    def parse(value) -> str:
        if value not in options:
            raise ConfigError(f"expected one of {', '.join(options)}, got {value!r}")
        return value

    return parse


def _text(value) -> str:
    return str(value)


def _flag(value) -> bool:
    if isinstance(value, bool):
        return value
    if str(value).lower() in ("1", "true", "yes"):
        return True
    if str(value).lower() in ("0", "false", "no"):
        return False
    raise ConfigError(f"expected a boolean, got {value!r}")


REQUIRED = object()


@dataclass(frozen=True)
class Field:
    parse: Callable[[Any], Any]
    default: Any = None
    help: str = ""


_PATTERN = _choice("positive", "negative", "symmetric")
_COMMON = {
    "out": Field(_text, None, "output path (stdout if omitted)"),
    "format": Field(_choice("csv", "json"), None, "output format (default: from --out suffix, else csv)"),
}
_SET = {
    "generator": Field(_choice("sqrt", "arithmetic"), "sqrt", "point generator"),
    "delta": Field(_number, REQUIRED, "density per side (sqrt) or step (arithmetic)"),
    "pattern": Field(_PATTERN, "symmetric", "sign pattern"),
    "n": Field(_integer, 10000, "points per side"),
}
_TARGET = {
    "target_shift": Field(_number, 0.5, "center of the unit Gaussian target"),
    "cutoff": Field(_number, lab.DEFAULT_CUTOFF, "relative spectral cutoff"),
}

SCHEMAS: dict[str, dict[str, Field]] = {
    "density": {**_SET, "radii": Field(_list_of(_number), None, "radius grid (default 0.1..0.9 of the largest modulus)")},
    "sums": {**_SET, "epsilon": Field(_list_of(_number), [0.0, 0.5, 1.0], "exponents epsilon")},
    "gram": {"nodes": Field(_list_of(_number), REQUIRED, "node abscissae"), **_TARGET},
    "project": {"nodes": Field(_list_of(_number), REQUIRED, "node abscissae"), **_TARGET},
    "curve": {
        "delta": Field(_number, REQUIRED, "density per side"),
        "pattern": Field(_PATTERN, "symmetric", "sign pattern"),
        "schedule": Field(_list_of(_integer), [10, 20, 40, 60], "truncation sizes"),
        **_TARGET,
    },
    "phase": {
        "deltas": Field(_list_of(_number), REQUIRED, "densities per side"),
        "nmax": Field(_integer, 60, "largest truncation"),
        "schedule": Field(_list_of(_integer), None, "truncation sizes ending at nmax"),
        "pattern": Field(_PATTERN, "symmetric", "sign pattern"),
        **_TARGET,
    },
    "indicator": {
        "delta": Field(_number, REQUIRED, "density per side of the real set"),
        "theta": Field(_list_of(parse_angle), REQUIRED, "directions, e.g. pi/8,pi/4"),
        "window": Field(_window, [20.0, 40.0], "radius window r_min:r_max"),
        "exclusion": Field(_number, 0.1, "zero-exclusion distance"),
        "samples": Field(_integer, 201, "radii sampled in the window"),
        "oversample": Field(_number, 12.0, "largest zero modulus as a multiple of r_max"),
    },
    "probe": {
        "deltas": Field(_list_of(_number), [0.1, 0.25, 0.4, 0.5, 0.6, 0.75, 1.0], "densities per side"),
        "radii": Field(_list_of(_number), [4.0, 8.0, 12.0], "truncation radii"),
        "rtol": Field(_number, 1e-6, "relative quadrature tolerance"),
        "oversample": Field(_number, 4.0, "largest zero modulus as a multiple of the largest radius"),
    },
    "bargmann-check": {
        "mu": Field(_list_of(_number), [-1.0, 0.0, 0.5, 1.0, 2.0], "translate centers"),
        "xmax": Field(_number, 3.0, "real-line grid half width"),
        "points": Field(_integer, 61, "real-line grid size"),
        "radius": Field(_number, 6.0, "Fock norm truncation radius"),
    },
    "conv-check": {"a": Field(_list_of(_number), REQUIRED, "exponents a > 1")},
    "envelope": {
        "profile": Field(_choice("gaussian", "hermite"), "gaussian", "|g_hat| profile to fit"),
        "width": Field(_number, 1.0, "Gaussian width parameter"),
        "xi_max": Field(_number, 4.0, "largest frequency sampled"),
        "samples": Field(_integer, 401, "frequency samples"),
        "n": Field(_integer, 1, "lower envelope polynomial power"),
        "m": Field(_integer, 1, "upper envelope polynomial power"),
    },
    "selftest": {
        "tol": Field(_number, 1e-10, "relative tolerance"),
        "seed": Field(_integer, 0, "seed of the randomized parameter points"),
        "points": Field(_integer, 10, "parameter points per check"),
        "json": Field(_flag, False, "machine-readable output"),
    },
}


def resolve_config(command: str, from_file: dict, from_flags: dict) -> dict:
    """Merge defaults < config file < flags, rejecting unknown and missing fields."""
    schema = {**SCHEMAS[command], **_COMMON}
    merged: dict[str, Any] = {}
    for source in (from_file, from_flags):
        for key, value in source.items():
            name = key.replace("-", "_")
            if name == "command":
                continue
            if name not in schema:
                raise ConfigError(f"unknown field {key!r} for {command}")
            try:
                merged[name] = schema[name].parse(value)
            except ConfigError as exc:
                raise ConfigError(f"field {name!r}: {exc}") from None
    for name, spec in schema.items():
        if name not in merged:
            if spec.default is REQUIRED:
                raise ConfigError(f"missing required field {name!r}")
            merged[name] = spec.default
    merged["command"] = command
    return merged


# ---------------------------------------------------------------- output


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if value is None:
        return ""
    return str(value)


def render_csv(config: dict, columns: list[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    buf.write(f"# artifact {artifact_version()}\n")
    buf.write("# config " + json.dumps(config, sort_keys=True) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(row[c]) for c in columns])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def render_json(config: dict, rows: list[dict], extra: dict | None = None) -> str:
    doc = {"artifact_version": artifact_version(), "config": config, "rows": rows}
    if extra:
        doc.update(extra)
    return json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"


@dataclass
class Result:
    columns: list[str]
    rows: list[dict]
    extra: dict | None = None


def _output_format(config: dict) -> str:
    if config["format"]:
        return config["format"]
    out = config.get("out")
    return "json" if out and out.lower().endswith(".json") else "csv"


def _write(config: dict, result: Result) -> None:
    text = (
        render_json(config, result.rows, result.extra)
        if _output_format(config) == "json"
        else render_csv(config, result.columns, result.rows)
    )
    if config["out"]:
        with open(config["out"], "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- commands


def _make_set(cfg: dict) -> ls.DiscreteSet:
    if cfg["n"] < 1:
        raise ConfigError("field 'n': must be >= 1")
    if cfg["generator"] == "sqrt":
        return ls.generate_sqrt_set(cfg["delta"], cfg["pattern"], cfg["n"])
    return ls.generate_arithmetic_set(cfg["delta"], cfg["pattern"], cfg["n"])


def cmd_density(cfg: dict) -> Result:
    s = _make_set(cfg)
    rep = ls.density_estimate(s, cfg["radii"])
    rows = [{"radius": r, "count": int(c), "count_over_r2": c / r**2} for r, c in zip(rep.radii, rep.counts)]
    summary = {
        "density": rep.density,
        "density_positive": rep.density_positive,
        "density_negative": rep.density_negative,
        "nominal_density": s.nominal_density,
        "residual": rep.residual,
    }
    return Result(["radius", "count", "count_over_r2"], rows, {"summary": summary})


def cmd_sums(cfg: dict) -> Result:
    s = _make_set(cfg)
    rows = []
    for eps in cfg["epsilon"]:
        rep = ls.s_epsilon(s, eps)
        rows.append(
            {
                "epsilon": rep.epsilon,
                "partial_sum": rep.partial_sum,
                "tail_bound": rep.tail_bound,
                "classification": rep.classification,
            }
        )
    return Result(["epsilon", "partial_sum", "tail_bound", "classification"], rows)


def cmd_gram(cfg: dict) -> Result:
    system = lab.build_gram(cfg["nodes"], gk.translate(cfg["target_shift"]), cfg["cutoff"])
    n = len(system.nodes)
    cols = ["node", "b"] + [f"g{j}" for j in range(n)]
    rows = []
    for i in range(n):
        row = {"node": float(system.nodes[i]), "b": float(system.rhs[i])}
        row.update({f"g{j}": float(system.matrix[i, j]) for j in range(n)})
        rows.append(row)
    extra = {
        "diagnostics": {
            "eigenvalues": system.eigenvalues,
            "condition": system.condition,
            "retained_rank": system.retained_rank,
        }
    }
    return Result(cols, rows, extra)


def cmd_project(cfg: dict) -> Result:
    target = gk.translate(cfg["target_shift"])
    system = lab.build_gram(cfg["nodes"], target, cfg["cutoff"])
    proj = lab.project(system, gk.norm_squared(target), cfg["cutoff"])
    row = {
        "residual_sq": proj.residual_sq,
        "target_norm_sq": gk.norm_squared(target),
        "retained_rank": proj.solve.retained,
        "clip": proj.clip,
        "degenerate": proj.degenerate,
    }
    return Result(list(row), [row], {"coefficients": proj.solve.solution})


def cmd_curve(cfg: dict) -> Result:
    sizes = cfg["schedule"]
    per_side = sizes[-1] if cfg["pattern"] != "symmetric" else (sizes[-1] + 1) // 2
    s = ls.generate_sqrt_set(cfg["delta"], cfg["pattern"], per_side)
    curve = lab.residual_curve(s, gk.translate(cfg["target_shift"]), sizes, cfg["cutoff"])
    rows = [
        {"n": int(n), "residual_sq": float(d), "retained_rank": int(k), "clip": float(c)}
        for n, d, k, c in zip(curve.sizes, curve.residuals, curve.ranks, curve.clips)
    ]
    return Result(["n", "residual_sq", "retained_rank", "clip"], rows, {"monotone": curve.monotone})


def cmd_phase(cfg: dict) -> Result:
    table = lab.phase_transition_experiment(
        cfg["deltas"],
        gk.translate(cfg["target_shift"]),
        cfg["nmax"],
        cfg["schedule"],
        cfg["pattern"],
        cfg["cutoff"],
    )
    extra = {"curves": [c.as_dict() for c in table.curves], "non_increasing": table.non_increasing}
    return Result(["delta", "n_max", "residual_sq", "retained_rank", "cutoff", "clip"], table.rows(), extra)


def cmd_indicator(cfg: dict) -> Result:
    r_max = cfg["window"][1]
    n = int(math.ceil(cfg["delta"] * (cfg["oversample"] * r_max) ** 2))
    product = fp.quartic_product(ls.generate_sqrt_set(cfg["delta"], "positive", n))
    rows = []
    for theta in cfg["theta"]:
        est = fp.indicator_estimate(product, theta % (2 * math.pi), tuple(cfg["window"]), cfg["exclusion"], cfg["samples"])
        rows.append(
            {
                "theta": est.theta,
                "r_min": est.r_min,
                "r_max": est.r_max,
                "h_hat": est.h_hat,
                "h_target": fp.indicator_target(cfg["delta"], est.theta),
                "residual": est.residual,
                "excluded_count": est.excluded_count,
            }
        )
    cols = ["theta", "r_min", "r_max", "h_hat", "h_target", "residual", "excluded_count"]
    return Result(cols, rows, {"factors": n})


def cmd_probe(cfg: dict) -> Result:
    radii = cfg["radii"]
    spec = QuadratureSpec(atol=1e-300, rtol=cfg["rtol"])
    rows, trends = [], []
    for delta in cfg["deltas"]:
        product = fp.probe_product(delta, max(radii), cfg["oversample"])
        res = fp.fock_membership_probe(product, radii, spec)
        trends.append(res.as_dict())
        rows.append(
            {
                "delta": delta,
                "expected": res.expected or "none",
                "verdict": res.verdict,
                "raw_classification": res.trend.classification,
                "growth_exponent": res.trend.growth_exponent,
                "consistent": "" if res.consistent is None else res.consistent,
            }
        )
    cols = ["delta", "expected", "verdict", "raw_classification", "growth_exponent", "consistent"]
    return Result(cols, rows, {"probes": trends})


def cmd_bargmann_check(cfg: dict) -> Result:
    xs = np.linspace(-cfg["xmax"], cfg["xmax"], cfg["points"])
    radius = cfg["radius"]
    rows = []
    for mu in cfg["mu"]:
        handle = bg.bargmann_gaussian_translate(mu)
        trend = bg.fock_norm_trend(handle, [radius / 3, 2 * radius / 3, radius])
        norm = float(trend.norms[-1])
        expected = gk.norm_squared(gk.translate(mu))
        rows.append(
            {
                "mu": mu,
                "identity_deviation": bg.real_line_identity_check(mu, xs),
                "fock_norm": norm,
                "l2_norm_sq": expected,
                "isometry_error": abs(norm - expected),
            }
        )
    return Result(["mu", "identity_deviation", "fock_norm", "l2_norm_sq", "isometry_error"], rows)


def cmd_conv_check(cfg: dict) -> Result:
    rows = [gk.convolution_identity_check(a).as_dict() for a in cfg["a"]]
    cols = ["a", "b", "printed_constant", "oracle_constant", "closed_form_constant", "relative_deviation", "shape_deviation", "shape_ok"]
    return Result(cols, rows)


def _envelope_profile(cfg: dict, xi: np.ndarray) -> np.ndarray:
    if cfg["profile"] == "gaussian":
        g = gk.fourier_transform(gk.GaussianFn(1.0, cfg["width"], 0.0))
        return np.asarray(g(xi))
    # transform of (1 + 1/(2 pi) - t^2) e^{-pi t^2}
    return (1.0 + xi**2) * np.exp(-np.pi * xi**2)


def cmd_envelope(cfg: dict) -> Result:
    xi = np.linspace(0.0, cfg["xi_max"], cfg["samples"])
    fit = gk.envelope_fit(xi, _envelope_profile(cfg, xi), cfg["n"], cfg["m"])
    row = dict(fit.__dict__)
    return Result(list(row), [row])


COMMANDS: dict[str, Callable[[dict], Result]] = {
    "density": cmd_density,
    "sums": cmd_sums,
    "gram": cmd_gram,
    "project": cmd_project,
    "curve": cmd_curve,
    "phase": cmd_phase,
    "indicator": cmd_indicator,
    "probe": cmd_probe,
    "bargmann-check": cmd_bargmann_check,
    "conv-check": cmd_conv_check,
    "envelope": cmd_envelope,
}


def run_selftest_command(cfg: dict) -> int:
    results = run_selftest(cfg["tol"], cfg["seed"], cfg["points"])
    failed = [r.name for r in results if not r.passed]
    if cfg["json"]:
        doc = {
            "artifact_version": artifact_version(),
            "config": cfg,
            "passed": not failed,
            "failures": failed,
            "checks": [r.as_dict() for r in results],
        }
        text = json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"
    else:
        text = format_table(results) + "\n"
        text += ("all checks passed\n" if not failed else "failed: " + ", ".join(failed) + "\n")
    if cfg["out"]:
        with open(cfg["out"], "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_SELFTEST if failed else EXIT_OK


# ---------------------------------------------------------------- argv


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gausspan", description="Completeness experiments for Gaussian translates.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {artifact_version()}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name, schema in SCHEMAS.items():
        p = sub.add_parser(name, argument_default=argparse.SUPPRESS)
        p.add_argument("--config", help="JSON file with fields for this command (flags win)")
        for field_name, spec in {**schema, **_COMMON}.items():
            flag = "--" + field_name.replace("_", "-")
            if spec.parse is _flag:
                p.add_argument(flag, dest=field_name, action="store_true", help=spec.help)
            else:
                p.add_argument(flag, dest=field_name, help=spec.help)
    return parser


def _load_config_file(path: str) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path!r} is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config file must hold a JSON object")
    return doc


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        ns = vars(build_parser().parse_args(argv))
        command = ns.pop("command", None)
        if command is None:
            raise ConfigError("missing subcommand")
        path = ns.pop("config", None)
        file_cfg = _load_config_file(path) if path else {}
        if file_cfg.get("command", command) != command:
            raise ConfigError(f"config is for {file_cfg['command']!r}, not {command!r}")
        cfg = resolve_config(command, file_cfg, ns)
        if command == "selftest":
            return run_selftest_command(cfg)
        result = COMMANDS[command](cfg)
        _write(cfg, result)
        return EXIT_OK
    except (QuadratureError, SolveError, lab.ResidualClipError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    raise SystemExit(main())
