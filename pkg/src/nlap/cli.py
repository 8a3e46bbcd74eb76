"""Command-line front end: kernel checks, symbol tables, boundary-value
solves, eigensolves, and horizon sweeps.

Runs are driven by a flat ``key = value`` config document (``#`` starts a
comment).  Each command has an explicit key schema; unknown keys are
rejected and every defaulted value is resolved up front, so the manifest
written next to the results is itself a complete, re-runnable config.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

import nlap

from .fields import (Disk, Interval, Rect, assemble, assemble_operator,
                     build_grid, write_field)
from .horizon import SweepConfig, save_sweep, sweep
from .kernels import (check_hypotheses, load_table, make_kernel, multiplier,
                      normalize, rescale)
from .plots import emit_plots
from .solvers import LinearProblem, PLapProblem, solve_linear, solve_plap
from .spectra import (DENSE_EIG_CUTOFF, EigenSet, eigs_linear, first_eig_p,
                      save_eigenset)

COMMANDS = ("kernel-check", "symbol", "solve", "eig", "sweep")


# --------------------------------------------------------------------------
# config schema


@dataclass(frozen=True)
class _Key:
    kind: str  # one of: str, int, float, bool, floats
    required: bool = False
    default: object = None
    choices: tuple = ()


_KIND_WORDS = {"str": "a string", "int": "an integer", "float": "a number",
               "bool": "a boolean",
               "floats": "a comma-separated list of numbers"}

_GLOBAL_KEYS = {
    "out": _Key("str", default="out"),
    "seed": _Key("int", default=0),
    "threads": _Key("int", default=1),
    "version": _Key("str", default=nlap.__version__),
}

_POSITIVE_KEYS = frozenset({"h", "delta", "tol", "grad_tol",
                            "inner_grad_tol", "residual_threshold",
                            "xi_max", "radius", "ref_h", "ref_radius"})


def _kernel_keys(raw: dict, grid_command: bool) -> dict:
    keys = {
        "family": _Key("str", required=True,
                       choices=("truncated-power", "pure-power",
                                "tabulated")),
        "dim": _Key("int", required=True),
    }
    family = raw.get("family")
    if family == "tabulated":
        keys["table"] = _Key("str", required=True)
    else:
        keys["s"] = _Key("float", required=True)
        if family != "pure-power":
            keys["cutoff"] = _Key("str", default="smooth",
                                  choices=("smooth", "hard"))
    # Grid commands need unit-mass normalization for the horizon
    # rescalings to mean anything; analytic commands work on the kernel
    # as given (pure powers cannot be normalized at all).
    keys["normalize"] = _Key("bool", default=grid_command)
    return keys


def _domain_keys(raw: dict) -> dict:
    keys = {"domain": _Key("str", required=True,
                           choices=("interval", "rect", "disk"))}
    kind = raw.get("domain")
    if kind == "interval":
        keys["lo"] = _Key("float", required=True)
        keys["hi"] = _Key("float", required=True)
    elif kind == "rect":
        keys["lo"] = _Key("floats", required=True)
        keys["hi"] = _Key("floats", required=True)
    elif kind == "disk":
        keys["center"] = _Key("floats", required=True)
        keys["radius"] = _Key("float", required=True)
    return keys


def _schema_for(command: str, raw: dict) -> dict:
    schema = {}
    if command == "kernel-check":
        schema.update(_kernel_keys(raw, grid_command=False))
    elif command == "symbol":
        schema.update(_kernel_keys(raw, grid_command=False))
        schema["xi_max"] = _Key("float", required=True)
        schema["xi_count"] = _Key("int", required=True)
        schema["delta"] = _Key("float")
        if raw.get("delta") is not None:
            schema["mode"] = _Key("str", required=True,
                                  choices=("vanishing", "diverging"))
    elif command == "solve":
        schema.update(_kernel_keys(raw, grid_command=True))
        schema.update(_domain_keys(raw))
        schema["h"] = _Key("float", required=True)
        schema["delta"] = _Key("float", required=True)
        schema["mode"] = _Key("str", default="vanishing",
                              choices=("vanishing", "diverging"))
        schema["p"] = _Key("float", required=True)
        schema["rhs"] = _Key("str", required=True,
                             choices=("uniform", "bump"))
        schema["rhs_scale"] = _Key("float", default=1.0)
        schema["grad_tol"] = _Key("float", default=1e-8)
        schema["energy_tol"] = _Key("float", default=1e-12)
        schema["max_iter"] = _Key("int", default=100_000)
    elif command == "eig":
        schema.update(_kernel_keys(raw, grid_command=True))
        schema.update(_domain_keys(raw))
        schema["h"] = _Key("float", required=True)
        schema["delta"] = _Key("float", required=True)
        schema["mode"] = _Key("str", default="vanishing",
                              choices=("vanishing", "diverging"))
        schema["p"] = _Key("float", required=True)
        schema["m"] = _Key("int", required=True)
        schema["tol"] = _Key("float", default=1e-8)
        schema["inner_grad_tol"] = _Key("float", default=1e-9)
    elif command == "sweep":
        schema.update(_kernel_keys(raw, grid_command=True))
        schema.update(_domain_keys(raw))
        schema["mode"] = _Key("str", required=True,
                              choices=("vanishing", "diverging"))
        schema["deltas"] = _Key("floats", required=True)
        schema["p"] = _Key("float", default=2.0)
        schema["m"] = _Key("int", default=1)
        schema["h"] = _Key("float")
        schema["ref_h"] = _Key("float")
        schema["ref_radius"] = _Key("float")
        schema["tol"] = _Key("float", default=1e-8)
        schema["residual_threshold"] = _Key("float", default=1e-5)
    else:
        raise ValueError(f"key 'command' must be one of "
                         f"{', '.join(COMMANDS)}; got {command!r}")
    schema.update(_GLOBAL_KEYS)
    return schema


@dataclass(frozen=True)
class RunConfig:
    """A validated command plus its fully resolved key table."""

    command: str
    values: tuple  # sorted (key, value) pairs

    def __getitem__(self, key: str):
        for name, value in self.values:
            if name == key:
                return value
        raise KeyError(key)

    def get(self, key: str, default=None):
        try:
            return self[key]
        except KeyError:
            return default

    def as_dict(self) -> dict:
        return dict(self.values)

    def replace(self, **updates) -> "RunConfig":
        table = self.as_dict()
        table.update(updates)
        return RunConfig(self.command, tuple(sorted(table.items())))


def _parse_lines(text: str) -> dict:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ValueError(f"line {lineno} is not a 'key = value' "
                             f"assignment: {body!r}")
        key, value = (part.strip() for part in body.split("=", 1))
        if not key:
            raise ValueError(f"line {lineno} has an empty key")
        if key in raw:
            raise ValueError(f"duplicate key {key!r} on line {lineno}")
        raw[key] = value
    return raw


def _coerce(key: str, value, spec: _Key):
    if isinstance(value, str):
        try:
            if spec.kind == "int":
                out = int(value)
            elif spec.kind == "float":
                out = float(value)
            elif spec.kind == "bool":
                low = value.lower()
                if low in ("true", "yes", "on", "1"):
                    out = True
                elif low in ("false", "no", "off", "0"):
                    out = False
                else:
                    raise ValueError
            elif spec.kind == "floats":
                out = tuple(float(tok) for tok in value.split(","))
            else:
                out = value
        except ValueError:
            raise ValueError(f"key {key!r} expects {_KIND_WORDS[spec.kind]},"
                             f" got {value!r}") from None
    else:
        out = value
    if spec.choices and out not in spec.choices:
        raise ValueError(f"key {key!r} must be one of "
                         f"{', '.join(spec.choices)}; got {out!r}")
    return out


def _validate_ranges(values: dict) -> None:
    for key in sorted(values):
        val = values[key]
        if val is None:
            continue
        if key in _POSITIVE_KEYS and not val > 0:
            raise ValueError(f"key {key!r} must be positive")
    if values.get("energy_tol") is not None and values["energy_tol"] < 0:
        raise ValueError("key 'energy_tol' must be nonnegative")
    if values.get("p") is not None and not values["p"] > 1.0:
        raise ValueError("key 'p' must exceed 1")
    if values.get("dim") not in (None, 1, 2):
        raise ValueError("key 'dim' must be 1 or 2")
    if values.get("s") is not None and not 0.0 < values["s"] < 1.0:
        raise ValueError("key 's' must lie strictly between 0 and 1")
    if values.get("m") is not None and values["m"] < 1:
        raise ValueError("key 'm' must be at least 1")
    if values.get("xi_count") is not None and values["xi_count"] < 2:
        raise ValueError("key 'xi_count' must be at least 2")
    if values.get("max_iter") is not None and values["max_iter"] < 1:
        raise ValueError("key 'max_iter' must be at least 1")
    if values.get("threads") is not None and values["threads"] < 1:
        raise ValueError("key 'threads' must be at least 1")
    if values.get("seed") is not None and values["seed"] < 0:
        raise ValueError("key 'seed' must be nonnegative")
    deltas = values.get("deltas")
    if deltas is not None and any(not d > 0 for d in deltas):
        raise ValueError("key 'deltas' must contain positive values")


def parse_config(text: str, command: str | None = None,
                 overrides: dict | None = None) -> RunConfig:
    """Parse and validate a config document into a RunConfig.

    ``command`` (from the CLI subcommand) and a ``command`` key in the
    document are reconciled; defaults are filled; unknown keys are
    rejected; numeric ranges are checked before any computation.
    ``overrides`` (out/seed/threads from flags) win over document keys.
    """
    raw = _parse_lines(text)
    file_command = raw.pop("command", None)
    if (file_command is not None and command is not None
            and file_command != command):
        raise ValueError(f"config names command {file_command!r} but "
                         f"{command!r} was invoked")
    command = command if command is not None else file_command
    if command is None:
        raise ValueError("missing required key 'command'")
    if overrides:
        for key, value in overrides.items():
            if value is not None:
                raw[key] = value
    schema = _schema_for(command, raw)
    values = {}
    for key, spec in schema.items():
        if key in raw:
            values[key] = _coerce(key, raw.pop(key), spec)
        elif spec.required:
            raise ValueError(f"missing required key {key!r} for command "
                             f"{command!r}")
        else:
            values[key] = spec.default
    if raw:
        extra = ", ".join(repr(k) for k in sorted(raw))
        raise ValueError(f"unknown keys for command {command!r}: {extra}")
    _validate_ranges(values)
    return RunConfig(command=command, values=tuple(sorted(values.items())))


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    return str(value)


def serialize_config(config: RunConfig) -> str:
    """Write a config back out; parse_config round-trips it exactly.

    Floats are written with round-trip precision; keys resolved to None
    (unused optionals) are omitted and re-default to None on re-parse.
    """
    lines = [f"command = {config.command}"]
    for key, value in config.values:
        if value is None:
            continue
        lines.append(f"{key} = {_format_value(value)}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# command execution


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([f"{v:.17g}" if isinstance(v, float) else str(v)
                             for v in row])


def _build_kernel(config: RunConfig):
    family = config["family"]
    if family == "tabulated":
        kernel = load_table(config["table"])
        if kernel.dim != config["dim"]:
            raise ValueError(f"tabulated kernel is {kernel.dim}-dimensional "
                             f"but the config says dim = {config['dim']}")
    elif family == "truncated-power":
        kernel = make_kernel(family, config["dim"], s=config["s"],
                             cutoff=config["cutoff"])
    else:
        kernel = make_kernel(family, config["dim"], s=config["s"])
    if config["normalize"]:
        kernel = normalize(kernel)
    return kernel


def _build_domain(config: RunConfig):
    kind = config["domain"]
    if kind == "interval":
        if config["dim"] != 1:
            raise ValueError("an interval domain needs dim = 1")
        return Interval(config["lo"], config["hi"])
    if config["dim"] != 2:
        raise ValueError(f"a {kind} domain needs dim = 2")
    if kind == "rect":
        lo, hi = config["lo"], config["hi"]
        if len(lo) != 2 or len(hi) != 2:
            raise ValueError("rect corners need exactly two coordinates")
        return Rect(tuple(lo), tuple(hi))
    center = config["center"]
    if len(center) != 2:
        raise ValueError("disk centers need exactly two coordinates")
    return Disk(tuple(center), config["radius"])


def _build_rhs(config: RunConfig, grid, domain) -> np.ndarray:
    scale = config["rhs_scale"]
    if config["rhs"] == "uniform":
        return np.where(grid.domain_mask, scale, 0.0)
    lo, hi = domain.bounding_box()
    points = grid.points()
    profile = np.ones(grid.shape)
    for k in range(grid.dim):
        center = 0.5 * (lo[k] + hi[k])
        half = 0.5 * (hi[k] - lo[k])
        t = np.clip((points[..., k] - center) / half, -1.0, 1.0)
        profile = profile * np.cos(0.5 * np.pi * t) ** 2
    return np.where(grid.domain_mask, scale * profile, 0.0)


def _run_kernel_check(config: RunConfig, out: Path) -> RunConfig:
    report = check_hypotheses(_build_kernel(config))
    rows = sorted(report.verdicts.items())
    _write_csv(out / "kernel_check.csv", ("hypothesis", "verdict"), rows)
    return config


def _run_symbol(config: RunConfig, out: Path) -> RunConfig:
    kernel = _build_kernel(config)
    if config["delta"] is not None:
        kernel = rescale(kernel, config["delta"], mode=config["mode"])
    xi = np.linspace(0.0, config["xi_max"], config["xi_count"])
    values = np.asarray(multiplier(kernel, xi), dtype=float)
    _write_csv(out / "symbol.csv", ("xi", "multiplier"),
               zip(xi.tolist(), values.tolist()))
    return config


def _run_solve(config: RunConfig, out: Path) -> RunConfig:
    kernel = rescale(_build_kernel(config), config["delta"],
                     mode=config["mode"])
    domain = _build_domain(config)
    grid = build_grid(domain, config["h"], config["delta"])
    rhs = _build_rhs(config, grid, domain)
    if config["p"] == 2.0:
        solution = solve_linear(LinearProblem(grid=grid, kernel=kernel,
                                              rhs=rhs))
    else:
        problem = PLapProblem(grid=grid, kernel=kernel, p=config["p"],
                              rhs=rhs, grad_tol=config["grad_tol"],
                              energy_tol=config["energy_tol"],
                              max_iter=config["max_iter"])
        solution = solve_plap(problem)
    write_field(solution, out / "solution.fld")
    interior = solution.values[grid.domain_mask]
    _write_csv(out / "solve.csv",
               ("p", "h", "delta", "unknowns", "sup_abs", "l2_norm"),
               [(config["p"], grid.h, config["delta"], interior.size,
                 float(np.max(np.abs(interior))),
                 float(np.sqrt(grid.h ** grid.dim * np.sum(interior ** 2))))])
    emit_plots([out / "solution.fld"], "field", out)
    return config


def _run_eig(config: RunConfig, out: Path) -> RunConfig:
    kernel = rescale(_build_kernel(config), config["delta"],
                     mode=config["mode"])
    domain = _build_domain(config)
    grid = build_grid(domain, config["h"], config["delta"])
    if config["p"] == 2.0:
        unknowns = int(np.count_nonzero(grid.domain_mask))
        op = (assemble(grid, kernel) if unknowns < DENSE_EIG_CUTOFF
              else assemble_operator(grid, kernel))
        eigset = eigs_linear(op, config["m"])
    else:
        lam, field, report = first_eig_p(
            grid, kernel, config["p"], tol=config["tol"],
            seed=config["seed"], inner_grad_tol=config["inner_grad_tol"])
        eigset = EigenSet(p=config["p"], lambdas=(lam,), fields=(field,),
                          residuals=(report.residual,))
        if config["m"] != 1:
            config = config.replace(m=1)
    save_eigenset(eigset, out / "eigs")
    dumps = [out / "eigs" / f"eig_{i:03d}.fld"
             for i in range(1, len(eigset) + 1)]
    emit_plots(dumps, "field", out)
    return config


def _run_sweep(config: RunConfig, out: Path) -> RunConfig:
    kernel = _build_kernel(config)
    domain = _build_domain(config)
    deltas = config["deltas"]
    updates = {}
    if config["p"] != 2.0 and config["m"] != 1:
        updates["m"] = 1
    # Resolve the reference parameters here so the manifest records them.
    if config["mode"] == "vanishing":
        if config["ref_h"] is None:
            spacings = [config["h"] if config["h"] is not None else d / 8.0
                        for d in deltas]
            updates["ref_h"] = min(spacings) / 2.0
    elif config["ref_radius"] is None:
        lo, hi = domain.bounding_box()
        diameter = float(np.linalg.norm(np.asarray(hi) - np.asarray(lo)))
        updates["ref_radius"] = max(8.0 * diameter, 2.0 * max(deltas))
    if updates:
        config = config.replace(**updates)
    sweep_config = SweepConfig(
        kernel=kernel, mode=config["mode"], deltas=tuple(deltas),
        domain=domain, p=config["p"], m=config["m"], h=config["h"],
        ref_h=config["ref_h"], ref_radius=config["ref_radius"],
        eig_tol=config["tol"],
        residual_threshold=config["residual_threshold"],
        seed=config["seed"], threads=config["threads"])
    result = sweep(sweep_config)
    save_sweep(result, out / "sweep.csv")
    if result.partial:
        raise RuntimeError(result.failure)
    if result.rate is not None:
        _write_csv(out / "rate.csv", ("slope", "stderr", "ci_lo", "ci_hi"),
                   [(result.rate.slope, result.rate.stderr,
                     result.rate.interval[0], result.rate.interval[1])])
    if result.rows:
        emit_plots([out / "sweep.csv"], "sweep", out)
    return config


_HANDLERS = {"kernel-check": _run_kernel_check, "symbol": _run_symbol,
             "solve": _run_solve, "eig": _run_eig, "sweep": _run_sweep}


def run(config: RunConfig) -> int:
    """Execute a validated config; artifacts land in its output directory.

    On success the fully resolved config is written as ``manifest.txt``
    (itself a valid config: re-running it reproduces the numbers) and the
    exit status is 0.  On failure a key=value ``error.txt`` record is
    written instead and the status is 1.
    """
    out = Path(config["out"])
    out.mkdir(parents=True, exist_ok=True)
    try:
        resolved = _HANDLERS[config.command](config, out)
    except Exception as exc:  # every failure becomes an error record
        (out / "error.txt").write_text(
            f"command = {config.command}\nerror = {exc}\n")
        return 1
    (out / "manifest.txt").write_text(serialize_config(resolved))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="nlap",
        description="nonlocal operator toolbox: kernel checks, multiplier "
                    "tables, volume-constrained solves, eigenpairs, and "
                    "horizon sweeps")
    subparsers = parser.add_subparsers(dest="command", required=True)
    blurbs = {
        "kernel-check": "validate a kernel against the admissibility "
                        "hypotheses",
        "symbol": "tabulate the nonlocal Laplacian's Fourier multiplier",
        "solve": "solve a volume-constrained boundary-value problem",
        "eig": "compute Dirichlet eigenpairs on a grid",
        "sweep": "run a horizon sweep against a reference limit",
    }
    for name in COMMANDS:
        sub = subparsers.add_parser(name, help=blurbs[name])
        sub.add_argument("--config", required=True,
                         help="path to a key = value config file")
        sub.add_argument("--out",
                         help="output directory (overrides the config)")
        sub.add_argument("--threads", type=int,
                         help="worker cap (overrides the config)")
        sub.add_argument("--seed", type=int,
                         help="random seed (overrides the config)")
    args = parser.parse_args(argv)
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    try:
        config = parse_config(text, command=args.command,
                              overrides={"out": args.out,
                                         "threads": args.threads,
                                         "seed": args.seed})
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
