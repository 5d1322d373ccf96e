"""Command-line front end: simulate, verify, classify, export.

Exit codes: 0 success, 1 check failure, 2 I/O or configuration error,
3 precondition violation.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import re
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .evolution import (
    TRAJECTORY_COLUMNS,
    BlowUpError,
    SimConfig,
    StabilityError,
    monitor_conservation,
    read_trajectory_csv,
    run,
)
from .fields import Grid, RealField, load_field
from .moments import extract_moments
from .profiles import TAGS, profile
from .spectral_operator import hermite_function

EXIT_OK, EXIT_FAIL, EXIT_IO, EXIT_PRECONDITION = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- recipes

_NUMBER = r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_TERM = re.compile(
    rf"\s*(?P<sign>[+-])?\s*(?:(?P<coef>{_NUMBER})\s*\*?\s*)?"
    r"(?P<name>phi\(\s*\d+\s*,\s*\d+\s*\)|[A-Za-z][A-Za-z0-9]*)\s*"
)
_PHI = re.compile(r"phi\(\s*(\d+)\s*,\s*(\d+)\s*\)")


def parse_recipe(text: str) -> list[tuple[float, str]]:
    """Split "0.05*F1 - 2e-2*H2 + phi(3,0)" into (coefficient, name) terms."""
    text = text.strip()
    if not text:
        raise ConfigError("empty recipe")
    terms, pos = [], 0
    while pos < len(text):
        m = _TERM.match(text, pos)
        if m is None or m.end() == pos:
            raise ConfigError(f"cannot parse recipe at {text[pos:]!r}")
        if pos > 0 and m.group("sign") is None:
            raise ConfigError(f"missing + or - before {m.group('name')!r}")
        coef = float(m.group("coef")) if m.group("coef") else 1.0
        if m.group("sign") == "-":
            coef = -coef
        if not math.isfinite(coef):
            raise ConfigError(f"non-finite coefficient in {m.group(0)!r}")
        name = m.group("name")
        if not (_PHI.fullmatch(name) or name in TAGS or name == "random"):
            raise ConfigError(f"unknown profile {name!r}; use one of {TAGS}, phi(a,b) or random")
        terms.append((coef, name))
        pos = m.end()
    return terms


def build_initial_data(recipe: str, grid: Grid, seed: int = 0) -> RealField:
    """Evaluate a recipe on the grid. "file:PATH" loads a stored field instead;
    the term "random" is a mean-free random datum with L1 norm equal to its
    coefficient, drawn from `seed`."""
    if recipe.strip().startswith("file:"):
        path = Path(recipe.strip()[5:])
        if not path.exists():
            raise FileNotFoundError(f"initial data file {path} not found")
        w = load_field(path)
        if w.grid != grid:
            raise ConfigError(f"field file grid {w.grid} differs from configured grid {grid}")
        return w
    from .asymptotics import random_small_datum

    rng = np.random.default_rng(seed)
    out = grid.zeros()
    for coef, name in parse_recipe(recipe):
        phi = _PHI.fullmatch(name)
        if phi:
            term = hermite_function((int(phi.group(1)), int(phi.group(2))), grid)
        elif name == "random":
            term = random_small_datum(grid, rng, amplitude=abs(coef), mass=0.0)
            coef = math.copysign(1.0, coef)
        else:
            term = profile(name, grid)
        out = out + coef * term
    return out


# ---------------------------------------------------------------- config

_SIM_FIELDS = {f.name: f for f in dataclasses.fields(SimConfig)}


@dataclass
class RunConfig:
    n: int = 128
    half_width: float = 12.0
    sim: SimConfig = field(default_factory=SimConfig)
    recipe: str = "0.05*F1 + 0.05*F2"
    out: str | None = None
    seed: int = 0

    @property
    def grid(self) -> Grid:
        return Grid(self.n, self.half_width)

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "half_width": self.half_width,
            **dataclasses.asdict(self.sim),
            "recipe": self.recipe,
            "out": self.out,
            "seed": self.seed,
        }


def _coerce(key: str, value: str, kind):
    try:
        if kind is bool or kind == "bool":
            low = value.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(value)
        if kind is int or kind == "int":
            return int(value)
        if kind is float or kind == "float":
            out = float(value)
            if not math.isfinite(out):
                raise ValueError(value)
            return out
        return value.strip()
    except ValueError:
        raise ConfigError(f"bad value {value!r} for {key}") from None


def read_config_file(path: str | Path) -> dict[str, str]:
    """Flat "key = value" lines; '#' starts a comment."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file {path} not found")
    pairs = {}
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        pairs[key] = value
    return pairs


def resolve_config(
    file_pairs: dict[str, str], overrides: list[str], base_sim: SimConfig | None = None
) -> RunConfig:
    pairs = dict(file_pairs)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = (s.strip() for s in item.split("=", 1))
        pairs[key] = value
    top = {"n": int, "half_width": float, "recipe": str, "out": str, "seed": int}
    cfg = RunConfig()
    sim_kwargs = dataclasses.asdict(base_sim or SimConfig())
    for key, value in pairs.items():
        if key in top:
            setattr(cfg, key, _coerce(key, value, top[key]))
        elif key in _SIM_FIELDS:
            sim_kwargs[key] = _coerce(key, value, _SIM_FIELDS[key].type)
        else:
            raise ConfigError(f"unknown config key {key!r}")
    try:
        cfg.sim = SimConfig(**sim_kwargs)
        cfg.grid  # validates n and half_width
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def _load_config(args, base_sim: SimConfig | None = None) -> RunConfig:
    pairs = read_config_file(args.config) if args.config else {}
    cfg = resolve_config(pairs, args.set or [], base_sim)
    if args.out is not None:
        cfg.out = args.out
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def _output_dir(cfg: RunConfig, required: bool) -> Path | None:
    if cfg.out is None:
        if required:
            raise ConfigError("an output directory is required (--out DIR)")
        return None
    out = Path(cfg.out)
    if not out.is_dir():
        raise FileNotFoundError(f"output directory {out} does not exist")
    return out


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(f"cannot serialize {type(o).__name__}")


# ---------------------------------------------------------------- commands


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    out = _output_dir(cfg, required=True)
    w0 = build_initial_data(cfg.recipe, cfg.grid, cfg.seed)
    try:
        traj = run(w0, cfg.sim)
    except BlowUpError as exc:
        print(f"simulate: {exc}", file=sys.stderr)
        return EXIT_FAIL
    traj.write_csv(out / "trajectory.csv")
    traj.write_snapshots(out)
    summary = {
        "config": cfg.as_dict(),
        "records": len(traj),
        "initial_moments": extract_moments(w0).as_dict(),
        "final_moments": traj.moment_set(len(traj) - 1).as_dict(),
        "conservation": monitor_conservation(traj).as_dict() if len(traj) >= 3 else None,
    }
    (out / "summary.json").write_text(_dump(summary) + "\n")
    print(f"simulate: {len(traj)} records written to {out / 'trajectory.csv'}")
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verification import run_suite

    checks = run_suite(args.suite, seed=args.seed or 0)
    for c in checks:
        print(c.row())
    failed = [c for c in checks if not c.passed]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    if args.out is not None:
        out = Path(args.out)
        if not out.is_dir():
            raise FileNotFoundError(f"output directory {out} does not exist")
        report = {"suite": args.suite, "seed": args.seed or 0, "checks": [c.as_dict() for c in checks]}
        (out / f"verify_{args.suite}.json").write_text(_dump(report) + "\n")
    if failed:
        print("failing checks:", file=sys.stderr)
        for c in failed:
            print(f"  {c.name}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_classify(args) -> int:
    from .asymptotics import CLASSIFY_CONFIG, ClassificationRefused, PreconditionError, classify_optimal_decay

    cfg = _load_config(args, base_sim=CLASSIFY_CONFIG)
    out = _output_dir(cfg, required=False)
    w0 = build_initial_data(cfg.recipe, cfg.grid, cfg.seed)
    try:
        report = classify_optimal_decay(w0, config=cfg.sim)
    except PreconditionError as exc:
        print(f"classify: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except ClassificationRefused as exc:
        print(f"classify: refused: {exc}", file=sys.stderr)
        return EXIT_FAIL
    payload = report.as_dict() | {"config": cfg.as_dict()}
    text = _dump(payload)
    print(text)
    if out is not None:
        (out / "classification.json").write_text(text + "\n")
    return EXIT_OK


EXPORT_EXTRA = ("t", "l1_unscaled", "t_half_l2_unscaled")


def export_rows(data: dict[str, np.ndarray]) -> list[list[float]]:
    """Trajectory columns plus t = e^tau - 1, t^0 |omega|_1 and t^{1/2} |omega|_2."""
    tau = data["tau"]
    rows = []
    for i in range(len(tau)):
        t = math.expm1(tau[i])
        frac = t / (1.0 + t)
        base = [float(data[c][i]) for c in TRAJECTORY_COLUMNS]
        rows.append(base + [t, float(data["l1"][i]), math.sqrt(frac) * float(data["l2"][i])])
    return rows


def cmd_export(args) -> int:
    path = Path(args.trajectory)
    if not path.exists():
        raise FileNotFoundError(f"trajectory {path} not found")
    data = read_trajectory_csv(path)
    header = list(TRAJECTORY_COLUMNS) + list(EXPORT_EXTRA)
    rows = export_rows(data)
    target = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        if args.format == "csv":
            writer = csv.writer(target, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([repr(x) for x in row])
        else:
            payload = {"columns": header, "rows": rows, "source": str(path)}
            target.write(_dump(payload) + "\n")
    finally:
        if target is not sys.stdout:
            target.close()
    return EXIT_OK


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scaled-vorticity", description="2D vorticity in similarity variables: simulate, verify, classify, export"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key (repeatable)")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, help="seed for random recipes")

    common(sub.add_parser("simulate", help="run a simulation and write the trajectory"))
    common(sub.add_parser("classify", help="optimal-decay classification of moment-free data"))
    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("--suite", default="all", choices=("constants", "spectrum", "semigroup", "conservation",
                                                      "asymptotics", "all"))
    p.add_argument("--out", help="directory for the JSON report")
    p.add_argument("--seed", type=int)
    p = sub.add_parser("export", help="plot-ready export of a trajectory CSV")
    p.add_argument("trajectory")
    p.add_argument("--format", default="csv", choices=("csv", "json"))
    p.add_argument("--out", help="output file (default: stdout)")
    return parser


_COMMANDS = {"simulate": cmd_simulate, "verify": cmd_verify, "classify": cmd_classify, "export": cmd_export}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("once")
            return _COMMANDS[args.command](args)
    except (ConfigError, StabilityError, FileNotFoundError, PermissionError, IsADirectoryError) as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
