"""Batch command-line front end.

Every subcommand reads an INI file (``--config``) whose sections set the model,
numerics and task parameters; ``--set section.key=value`` and the dedicated
flags override file keys.  Results go to ``--out`` as CSV (grids) or JSON
(structured results), each starting with a header that echoes the resolved
configuration.  Exit status: 0 success, 2 configuration error, 3 numerical
failure.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = ["ConfigError", "RunConfig", "resolve_config", "run", "main", "COMMANDS"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending field path."""


def _positive(x):
    return x > 0


def _nonnegative(x):
    return x >= 0


def _choice(*options):
    def check(x):
        return x in options

    check.options = options
    return check


# section -> key -> (type, default, validator or None, description)
BASE_SCHEMA = {
    "stratification": {
        "delta": (float, 1.0, _positive, "stratification rate"),
        "g": (float, 9.81, _positive, "gravity"),
    },
    "profile": {
        "epsilon": (float, 0.05, _nonnegative, "amplitude parameter, speed c = c0 + epsilon^2"),
        "table": (str, "", None, "optional tabulated profile (columns xi y psi rho)"),
        "speed": (float, 0.0, _nonnegative, "wave speed of a tabulated profile"),
    },
    "truncation": {
        "N": (int, 1, _nonnegative, "highest retained mode"),
    },
    "quadrature": {
        "nodes": (int, 128, _positive, "Gauss-Legendre nodes for y-quadrature"),
    },
    "assembly": {
        "cache": (bool, False, None, "spline-cache the assembled coefficients"),
        "cache_step": (float, 0.0, _nonnegative, "cache sample spacing (0 selects automatic)"),
    },
    "evans": {
        "L": (float, 0.0, _nonnegative, "half-length of the xi-interval (0 selects 40/decay rate)"),
        "step": (float, 0.25, _positive, "Magnus step length"),
        "method": (str, "orthogonal", _choice("orthogonal", "exterior"), "frame propagation method"),
        "integrator": (str, "magnus", _choice("magnus", "adaptive"), "fixed-step Magnus or adaptive DOP853"),
        "rtol": (float, 1e-8, _positive, "adaptive relative tolerance"),
        "atol": (float, 1e-10, _positive, "adaptive absolute tolerance"),
        "kappa_ref": (float, 0.0, _nonnegative, "normalization anchor (0 selects c/2)"),
    },
    "kdv": {
        "step": (float, 0.02, _positive, "Magnus step length in the slow variable"),
        "L": (float, 0.0, _nonnegative, "half-length in the slow variable (0 selects 40 sqrt(-s))"),
        "elimination": (str, "schur", _choice("schur", "drop"), "treatment of the fast hyperbolic directions"),
    },
    "run": {
        "seed": (int, 0, _nonnegative, "seed of the sample generators"),
        "threads": (int, 0, _nonnegative, "worker threads (0 selects available cores)"),
        "out": (str, "out", None, "output directory"),
        "tasks": (str, "", None, "comma-separated task section names, each [task:NAME] with a command key"),
    },
}

_GRID_OPTIONS = {
    "re_min": (float, 0.0, None, "lower real bound"),
    "re_max": (float, 1.0, None, "upper real bound"),
    "n_re": (int, 5, _positive, "real grid points"),
    "im_min": (float, 0.0, None, "lower imaginary bound"),
    "im_max": (float, 0.0, None, "upper imaginary bound"),
    "n_im": (int, 1, _positive, "imaginary grid points"),
}

_CONTOUR_OPTIONS = {
    "contour": (str, "circle", _choice("circle", "half-annulus"), "contour shape"),
    "center_re": (float, 0.0, None, "circle centre, real part"),
    "center_im": (float, 0.0, None, "circle centre, imaginary part"),
    "radius": (float, 1.0, _positive, "circle radius"),
    "r_in": (float, 1.0, _positive, "half-annulus inner radius"),
    "r_out": (float, 5.0, _positive, "half-annulus outer radius"),
    "offset": (float, 1e-4, _nonnegative, "shift of the half-annulus into the open right half-plane"),
    "points": (int, 32, _positive, "initial samples per arc"),
    "line_points": (int, 8, _positive, "initial samples per straight segment"),
}

_UNITS = {"units": (str, "lambda", _choice("lambda", "kappa"), "lengths in Lambda = kappa/eps^3 or in kappa")}
_SYSTEM = {"system": (str, "kdv", _choice("kdv", "reduced"), "KdV linearization or reduced truncated system")}

TASK_SCHEMA = {
    "splitting-check": {
        "samples": (int, 100, _positive, "number of Sobol kappa samples"),
        "re_max": (float, 2.0, _positive, "sample box real extent"),
        "im_max": (float, 2.0, _positive, "sample box imaginary half-extent"),
        "tol": (float, 1e-9, _positive, "root classification tolerance"),
    },
    "evans-grid": {**_GRID_OPTIONS, **_UNITS},
    "winding": {**_CONTOUR_OPTIONS, **_UNITS},
    "modes-check": {
        "points": (int, 401, _positive, "xi samples"),
        "tol": (float, 1e-5, _positive, "relative residual tolerance"),
    },
    "kdv-evans-grid": {**_GRID_OPTIONS, **_SYSTEM},
    "kdv-winding": {**_CONTOUR_OPTIONS, **_SYSTEM},
    "chi-check": {
        "samples": (int, 20, _positive, "number of random Lambda"),
        "radius": (float, 1.0, _positive, "Lambda sampled uniformly in the square [-radius, radius]^2"),
        "tol": (float, 1e-12, _positive, "coefficient residual tolerance"),
    },
    "coeffs": {
        "modes": (int, 4, _positive, "number of mode eigenvalues lambda_n to list"),
    },
}

COLUMNS = {
    "splitting-check": [
        ("index", "sample number"),
        ("kappa_re", "Re kappa"),
        ("kappa_im", "Im kappa"),
        ("n_stable", "eigenvalues with Re < 0"),
        ("n_unstable", "eigenvalues with Re > 0"),
        ("n_neutral", "eigenvalues within tol of the imaginary axis"),
        ("gap", "real-part separation between the N+1 leftmost eigenvalues and the rest"),
        ("ok", "counts equal (N+1, 3N+3) and gap > 0"),
    ],
    "evans-grid": [
        ("kappa_re", "Re kappa"),
        ("kappa_im", "Im kappa"),
        ("D_re", "Re D_N(kappa), normalized at kappa_ref"),
        ("D_im", "Im D_N(kappa)"),
        ("D_abs", "|D_N(kappa)|"),
    ],
    "kdv-evans-grid": [
        ("Lambda_re", "Re Lambda"),
        ("Lambda_im", "Im Lambda"),
        ("D_re", "Re D(Lambda)"),
        ("D_im", "Im D(Lambda)"),
        ("D_abs", "|D(Lambda)|"),
    ],
    "chi-check": [
        ("index", "sample number"),
        ("Lambda_re", "Re Lambda"),
        ("Lambda_im", "Im Lambda"),
        ("N", "truncation level"),
        ("residual", "max coefficient difference of the two characteristic polynomials"),
        ("ok", "residual <= tol"),
    ],
}

COMMANDS = tuple(TASK_SCHEMA)


@dataclass
class RunConfig:
    """Resolved configuration: one value for every schema key."""

    command: str
    values: dict = field(default_factory=dict)

    def get(self, section, key):
        return self.values[section][key]

    def task(self, key):
        return self.values["task"][key]

    def as_dict(self) -> dict:
        """Resolved settings without the output location, so artifacts do not depend on where they are written."""
        sections = {s: dict(sorted(v.items())) for s, v in sorted(self.values.items())}
        sections["run"] = {k: v for k, v in sections["run"].items() if k != "out"}
        return {"command": self.command, **sections}


def _convert(path, typ, raw):
    if isinstance(raw, typ) and not (typ is int and isinstance(raw, bool)):
        return raw
    text = str(raw).strip()
    try:
        if typ is bool:
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if typ is int:
            return int(text)
        if typ is float:
            val = float(text)
            if not math.isfinite(val):
                raise ValueError(text)
            return val
        return text
    except ValueError:
        raise ConfigError(f"{path}: cannot parse {text!r} as {typ.__name__}") from None


def _fill(path_prefix, schema, sources):
    out = {}
    for key, (typ, default, check, _) in schema.items():
        path = f"{path_prefix}.{key}"
        raw = default
        for src in sources:
            if key in src:
                raw = src[key]
        val = _convert(path, typ, raw)
        if check is not None and not check(val):
            options = getattr(check, "options", None)
            hint = f"must be one of {options}" if options else "out of range"
            raise ConfigError(f"{path}: {val!r} {hint}")
        out[key] = val
    unknown = set().union(*[set(s) for s in sources]) - set(schema) if sources else set()
    if unknown:
        raise ConfigError(f"{path_prefix}.{sorted(unknown)[0]}: unknown key")
    return out


def read_config_file(path) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config: file not found: {path}")
        try:
            parser.read(p)
        except configparser.Error as exc:
            raise ConfigError(f"config: {exc}") from None
    return parser


def _parse_overrides(items):
    out = {}
    for item in items or []:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"--set {item!r}: expected section.key=value")
        lhs, value = item.split("=", 1)
        section, key = lhs.rsplit(".", 1)
        out.setdefault(section.strip(), {})[key.strip()] = value.strip()
    return out


def resolve_config(command, parser, overrides=None, task_section=None) -> RunConfig:
    """Merge schema defaults, file sections and overrides into a ``RunConfig``."""
    if command not in TASK_SCHEMA:
        raise ConfigError(f"task.command: {command!r} is not one of {COMMANDS}")
    overrides = overrides or {}
    for section in parser.sections():
        if section not in BASE_SCHEMA and section not in TASK_SCHEMA and not section.startswith("task:"):
            raise ConfigError(f"{section}: unknown section")
    values = {}
    for section, schema in BASE_SCHEMA.items():
        sources = [dict(parser[section])] if parser.has_section(section) else []
        if section in overrides:
            sources.append(overrides[section])
        values[section] = _fill(section, schema, sources)
    task_sources = []
    if parser.has_section(command):
        task_sources.append(dict(parser[command]))
    if task_section is not None:
        sect = dict(parser[task_section])
        sect.pop("command", None)
        task_sources.append(sect)
    if "task" in overrides:
        task_sources.append(overrides["task"])
    prefix = task_section if task_section is not None else command
    values["task"] = _fill(prefix, TASK_SCHEMA[command], task_sources)
    for section in overrides:
        if section not in BASE_SCHEMA and section != "task":
            raise ConfigError(f"{section}: unknown section")
    if values["run"]["threads"] == 0:
        values["run"]["threads"] = os.cpu_count() or 1
    return RunConfig(command, values)


# ---- model construction ----


def _build_strat(cfg):
    from .stratification import Stratification

    return Stratification(cfg.get("stratification", "delta"), cfg.get("stratification", "g"))


def _build_profile(cfg, strat):
    from .profile import TabulatedProfile, WaveProfile

    table = cfg.get("profile", "table")
    if table:
        speed = cfg.get("profile", "speed")
        if speed <= 0:
            raise ConfigError("profile.speed: required (positive) with profile.table")
        return TabulatedProfile(table, strat, speed)
    return WaveProfile(strat, cfg.get("profile", "epsilon"))


def _build_truncation(cfg):
    from .truncation import TruncatedOperator

    strat = _build_strat(cfg)
    profile = _build_profile(cfg, strat)
    step = cfg.get("assembly", "cache_step") or None
    try:
        return TruncatedOperator(
            profile,
            cfg.get("truncation", "N"),
            nodes=cfg.get("quadrature", "nodes"),
            cache=cfg.get("assembly", "cache"),
            cache_step=step,
        )
    except ValueError as exc:
        raise ConfigError(f"profile: {exc}") from None


def _build_engine(cfg, truncop):
    from .evans import EvansConfig, EvansEngine

    ev = cfg.values["evans"]
    conf = EvansConfig(
        L=ev["L"] or None,
        step=ev["step"],
        method=ev["method"],
        integrator=ev["integrator"],
        rtol=ev["rtol"],
        atol=ev["atol"],
        kappa_ref=ev["kappa_ref"] or None,
    )
    return EvansEngine(truncop, conf)


def _lambda_scale(cfg, units):
    if units == "kappa":
        return 1.0
    eps = cfg.get("profile", "epsilon")
    if eps <= 0:
        raise ConfigError("profile.epsilon: must be positive when lengths are given in Lambda units")
    return eps**3


def _build_kdv_function(cfg):
    from .kdv import KdvEvans, ReducedSystem, kdv_evans_function
    from .profile import kdv_coefficients

    strat = _build_strat(cfg)
    coeffs = kdv_coefficients(strat, nodes=cfg.get("quadrature", "nodes"))
    L = cfg.get("kdv", "L") or None
    step = cfg.get("kdv", "step")
    if cfg.task("system") == "kdv":
        return kdv_evans_function(coeffs, L, step)
    eps = cfg.get("profile", "epsilon")
    truncop = _build_truncation(cfg) if eps > 0 else None
    system = ReducedSystem(coeffs, eps, cfg.get("truncation", "N"), truncop, cfg.get("kdv", "elimination"))
    return KdvEvans(system, L, step)


def _grid_points(cfg, scale=1.0):
    t = cfg.values["task"]
    re = np.linspace(t["re_min"], t["re_max"], t["n_re"])
    im = np.linspace(t["im_min"], t["im_max"], t["n_im"])
    return [scale * complex(a, b) for b in im for a in re]


def _build_contour(cfg, scale=1.0):
    from .evans import circle, half_annulus

    t = cfg.values["task"]
    if t["contour"] == "circle":
        center = scale * complex(t["center_re"], t["center_im"])
        return circle(center, scale * t["radius"], t["points"])
    if not t["offset"] < t["r_in"] < t["r_out"]:
        raise ConfigError(f"{cfg.command}.r_in: need offset < r_in < r_out")
    return half_annulus(scale * t["r_in"], scale * t["r_out"], scale * t["offset"], t["points"], t["line_points"])


def _parallel_map(func, items, threads):
    if threads <= 1 or len(items) <= 1:
        return [func(z) for z in items]
    # the first call fills lazily computed state (normalization) before sharing
    first = func(items[0])
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return [first] + list(pool.map(func, items[1:]))


# ---- tasks: each returns (kind, payload, ok) ----


def _task_splitting(cfg):
    from .spectrum import sobol_kappas, splitting_certificate

    t = cfg.values["task"]
    truncop = _build_truncation(cfg)
    kappas = sobol_kappas(t["samples"], cfg.get("run", "seed"), t["re_max"], t["im_max"])
    report = splitting_certificate(truncop.strat, truncop.c, truncop.N, kappas, t["tol"])
    rows = [
        [i, s.kappa.real, s.kappa.imag, s.n_stable, s.n_unstable, s.n_neutral, s.gap, s.ok]
        for i, s in enumerate(report.samples)
    ]
    return "csv", rows, report.passed


def _evans_rows(func, points, threads):
    vals = _parallel_map(func, points, threads)
    return [[z.real, z.imag, complex(v).real, complex(v).imag, abs(v)] for z, v in zip(points, vals)]


def _task_evans_grid(cfg):
    truncop = _build_truncation(cfg)
    engine = _build_engine(cfg, truncop)
    points = _grid_points(cfg, _lambda_scale(cfg, cfg.task("units")))
    return "csv", _evans_rows(engine.value, points, cfg.get("run", "threads")), True


def _winding_payload(func, contour, threads, error_estimate=None):
    from .evans import ContourTooCloseError, winding_number

    # warm the initial samples in parallel, the adaptive refinement reuses them
    initial = list(contour.points[:-1])
    cached = dict(zip(initial, _parallel_map(func, initial, threads)))

    def lookup(z):
        return cached[z] if z in cached else func(z)

    res = winding_number(lookup, contour)
    payload = {
        "contour": contour.label,
        "winding": res.winding,
        "raw_winding": res.raw_winding,
        "samples": res.samples,
        "min_abs": res.min_abs,
    }
    if error_estimate is not None:
        z_min = res.points[int(np.argmin(np.abs(res.values)))]
        err = error_estimate(z_min)
        payload["error_estimate"] = err
        if res.min_abs <= 10 * err:
            raise ContourTooCloseError(f"min |D| = {res.min_abs:.3e} is below 10x the error estimate {err:.3e}")
    return payload


def _task_winding(cfg):
    truncop = _build_truncation(cfg)
    engine = _build_engine(cfg, truncop)
    contour = _build_contour(cfg, _lambda_scale(cfg, cfg.task("units")))
    payload = _winding_payload(engine.value, contour, cfg.get("run", "threads"), engine.error_estimate)
    return "json", payload, True


def _task_modes(cfg):
    from .evans import translational_speed_modes

    truncop = _build_truncation(cfg)
    rep = translational_speed_modes(truncop.profile, truncop, cfg.task("points"))
    tol = cfg.task("tol")
    ok = bool(rep.v1_relative <= tol and rep.v2_relative <= tol)
    payload = {
        "v1_relative": rep.v1_relative,
        "v2_relative": rep.v2_relative,
        "v1_residual": rep.v1_residual,
        "v2_residual": rep.v2_residual,
        "degenerate": rep.degenerate,
        "passed": ok,
    }
    return "json", payload, ok


def _task_kdv_grid(cfg):
    func = _build_kdv_function(cfg)
    return "csv", _evans_rows(func.value, _grid_points(cfg), cfg.get("run", "threads")), True


def _task_kdv_winding(cfg):
    func = _build_kdv_function(cfg)
    return "json", _winding_payload(func.value, _build_contour(cfg), cfg.get("run", "threads")), True


def _task_chi(cfg):
    from .kdv import chi_factorization_check
    from .profile import kdv_coefficients

    t = cfg.values["task"]
    coeffs = kdv_coefficients(_build_strat(cfg), nodes=cfg.get("quadrature", "nodes"))
    rng = np.random.default_rng(cfg.get("run", "seed"))
    lams = t["radius"] * (rng.uniform(-1, 1, t["samples"]) + 1j * rng.uniform(-1, 1, t["samples"]))
    N = cfg.get("truncation", "N")
    rows = []
    for i, lam in enumerate(lams):
        ok, res = chi_factorization_check(coeffs, N, complex(lam), t["tol"])
        rows.append([i, lam.real, lam.imag, N, res, ok])
    return "csv", rows, all(r[-1] for r in rows)


def _task_coeffs(cfg):
    from .profile import kdv_coefficients
    from .stratification import mode_eigenvalue

    strat = _build_strat(cfg)
    coeffs = kdv_coefficients(strat, nodes=cfg.get("quadrature", "nodes"))
    payload = {
        "lambda": [mode_eigenvalue(strat, n) for n in range(cfg.task("modes"))],
        "c0": coeffs.c0,
        "r": coeffs.r,
        "s": coeffs.s,
    }
    return "json", payload, True


TASKS = {
    "splitting-check": _task_splitting,
    "evans-grid": _task_evans_grid,
    "winding": _task_winding,
    "modes-check": _task_modes,
    "kdv-evans-grid": _task_kdv_grid,
    "kdv-winding": _task_kdv_winding,
    "chi-check": _task_chi,
    "coeffs": _task_coeffs,
}


# ---- output ----


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def render_csv(cfg: RunConfig, rows) -> str:
    buf = io.StringIO()
    buf.write("# config: " + json.dumps(cfg.as_dict(), sort_keys=True) + "\n")
    for name, desc in COLUMNS[cfg.command]:
        buf.write(f"# column {name}: {desc}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([name for name, _ in COLUMNS[cfg.command]])
    for row in rows:
        writer.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x)
    return x


def render_json(cfg: RunConfig, payload) -> str:
    doc = {"config": cfg.as_dict(), "result": _jsonable(payload)}
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def run(cfg: RunConfig, name: str | None = None) -> tuple[int, Path]:
    """Execute one task and write its artifact; returns ``(exit status, path)``."""
    kind, payload, ok = TASKS[cfg.command](cfg)
    out_dir = Path(cfg.get("run", "out"))
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{name or cfg.command}.{kind}"
    text = render_csv(cfg, payload) if kind == "csv" else render_json(cfg, payload)
    path.write_text(text)
    return (EXIT_OK if ok else EXIT_NUMERICAL), path


def _task_list(parser):
    if not parser.has_section("run"):
        return []
    raw = parser["run"].get("tasks", "")
    names = [n.strip() for n in raw.split(",") if n.strip()]
    for n in names:
        sect = f"task:{n}"
        if not parser.has_section(sect):
            raise ConfigError(f"run.tasks: no section [{sect}]")
        if "command" not in parser[sect]:
            raise ConfigError(f"{sect}.command: missing")
    return names


def _help_epilog():
    lines = ["CSV columns:"]
    for cmd, cols in COLUMNS.items():
        lines.append(f"  {cmd}:")
        lines.extend(f"    {n}: {d}" for n, d in cols)
    lines.append("Exit status: 0 success, 2 configuration error, 3 numerical failure.")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI configuration file")
    common.add_argument("--out", help="output directory (run.out)")
    common.add_argument("--seed", help="seed of the sample generators (run.seed)")
    common.add_argument("--threads", help="worker threads (run.threads)")
    common.add_argument(
        "--set", action="append", default=[], metavar="SECTION.KEY=VALUE", help="override any configuration key"
    )
    parser = argparse.ArgumentParser(
        prog="isw-evans",
        description="Evans-function stability computations for internal solitary waves.",
        epilog=_help_epilog(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd, schema in TASK_SCHEMA.items():
        sp = sub.add_parser(cmd, parents=[common], help=f"run the {cmd} task")
        for key, (_, default, _, desc) in schema.items():
            sp.add_argument(f"--{key.replace('_', '-')}", dest=f"task_{key}", help=f"{desc} (default {default})")
    sub.add_parser("run", parents=[common], help="run the tasks listed in run.tasks")
    return parser


def _overrides_from_args(args):
    ov = _parse_overrides(args.set)
    for flag in ("out", "seed", "threads"):
        val = getattr(args, flag)
        if val is not None:
            ov.setdefault("run", {})[flag] = val
    for key, val in vars(args).items():
        if key.startswith("task_") and val is not None:
            ov.setdefault("task", {})[key[5:]] = val
    return ov


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        parser = read_config_file(args.config)
        overrides = _overrides_from_args(args)
        if args.command == "run":
            jobs = []
            for name in _task_list(parser):
                sect = f"task:{name}"
                jobs.append((name, resolve_config(parser[sect]["command"], parser, overrides, sect)))
        else:
            jobs = [(None, resolve_config(args.command, parser, overrides))]
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    status = EXIT_OK
    for name, cfg in jobs:
        try:
            code, path = run(cfg, name)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        except (ArithmeticError, RuntimeError, ValueError, np.linalg.LinAlgError) as exc:
            print(f"numerical failure in {name or cfg.command}: {exc}", file=sys.stderr)
            return EXIT_NUMERICAL
        print(path)
        if cfg.command == "coeffs":
            print(path.read_text(), end="")
        if code != EXIT_OK:
            print(f"certificate failed in {name or cfg.command}", file=sys.stderr)
            status = EXIT_NUMERICAL
    return status


if __name__ == "__main__":
    sys.exit(main())
