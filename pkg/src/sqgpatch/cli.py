"""Command-line entry point: ``sqgpatch run|twin|equiv|oracle``."""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, fields
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__, kernels
from .contour import arclength_normalize, circle, ellipse, perturbed_circle, read_snapshot, write_snapshot
from .diagnostics import equivalence_compare, h1_perturbation, twin_compare, write_diag_csv
from .errors import SqgError
from .oracles import TOLERANCES, run_oracles
from .stepper import SimConfig, run

log = logging.getLogger("sqgpatch")

EXIT_OK = 0
EXIT_ORACLE_FAIL = 1
EXIT_CONFIG = 2
EXIT_CODES = {"arc_chord": 3, "nan": 4, "gauge": 5, "phi": 6, "numerical": 7}

SIM_KEYS = ("n", "t_end", "dt", "cfl", "formulation", "resample_every", "snapshot_every")
THRESHOLD_KEYS = ("arc_chord_factor", "gauge_tol", "phi_floor")
SHAPES = {
    "circle": {"R": float, "center": list},
    "ellipse": {"a": float, "b": float},
    "perturbed_circle": {"eps": float, "m": int},
    "file": {"path": str},
}


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending field path."""


def _check_type(path, value, kind):
    if kind is float:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    elif kind is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    else:
        ok = isinstance(value, kind)
    if not ok:
        raise ConfigError(f"{path}: expected {kind.__name__}, got {type(value).__name__} {value!r}")
    return kind(value) if kind in (float, int) else value


def parse_config(text: str, base_dir: Path | None = None) -> dict:
    """Parse TOML text into {"sim": SimConfig, "initial": {...}, "echo": {...}}."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"<config>: not valid TOML ({exc})") from exc
    for section in raw:
        if section not in ("sim", "thresholds", "initial"):
            raise ConfigError(f"{section}: unknown section (expected sim, thresholds, initial)")
        if not isinstance(raw[section], dict):
            raise ConfigError(f"{section}: must be a table")
    sim_kwargs = {}
    types = {f.name: f.type for f in fields(SimConfig)}
    kinds = {"int": int, "float": float, "str": str, "float | None": float}
    for section, allowed in (("sim", SIM_KEYS), ("thresholds", THRESHOLD_KEYS)):
        for key, value in raw.get(section, {}).items():
            path = f"{section}.{key}"
            if key not in allowed:
                raise ConfigError(f"{path}: unknown key")
            sim_kwargs[key] = _check_type(path, value, kinds[types[key]])
    if "n" not in sim_kwargs:
        raise ConfigError("sim.n: required")
    if "t_end" not in sim_kwargs:
        raise ConfigError("sim.t_end: required")
    if "dt" not in sim_kwargs and "cfl" in sim_kwargs:
        sim_kwargs["dt"] = None  # cfl alone selects adaptive steps
    try:
        cfg = SimConfig(**sim_kwargs)
    except ValueError as exc:
        name = str(exc).split()[0]
        section = "thresholds" if name in THRESHOLD_KEYS else "sim"
        raise ConfigError(f"{section}.{name}: {exc}") from exc

    initial = dict(raw.get("initial", {}))
    shape = initial.pop("shape", None)
    if shape is None:
        raise ConfigError("initial.shape: required")
    if shape not in SHAPES:
        raise ConfigError(f"initial.shape: unknown shape {shape!r} (expected one of {sorted(SHAPES)})")
    params = {}
    for key, value in initial.items():
        path = f"initial.{key}"
        if key not in SHAPES[shape]:
            raise ConfigError(f"{path}: unknown key for shape {shape!r}")
        params[key] = _check_type(path, value, SHAPES[shape][key])
    if shape == "file":
        if "path" not in params:
            raise ConfigError("initial.path: required for shape 'file'")
        p = Path(params["path"])
        if not p.is_absolute() and base_dir is not None:
            p = base_dir / p
        params["path"] = str(p)
    if shape == "circle" and "center" in params:
        c = params["center"]
        if len(c) != 2 or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in c):
            raise ConfigError("initial.center: expected two numbers")
    echo = {
        "sim": {k: getattr(cfg, k) for k in SIM_KEYS},
        "thresholds": {k: getattr(cfg, k) for k in THRESHOLD_KEYS},
        "initial": {"shape": shape, **params},
    }
    return {"sim": cfg, "initial": {"shape": shape, **params}, "echo": echo}


def build_initial(spec: dict, n: int):
    shape = spec["shape"]
    params = {k: v for k, v in spec.items() if k != "shape"}
    try:
        if shape == "circle":
            return circle(params.get("R", 1.0), n, tuple(params.get("center", (0.0, 0.0))))
        if shape == "ellipse":
            return ellipse(params.get("a", 1.0), params.get("b", 0.5), n)
        if shape == "perturbed_circle":
            return perturbed_circle(params.get("eps", 0.1), params.get("m", 3), n)
        _, curve = read_snapshot(params["path"])
        if curve.n != n:
            raise ConfigError(f"initial.path: snapshot has n={curve.n}, sim.n is {n}")
        return arclength_normalize(curve)
    except ConfigError:
        raise
    except OSError as exc:
        raise ConfigError(f"initial.path: cannot read {params['path']} ({exc.strerror})") from exc
    except (ValueError, SqgError) as exc:
        raise ConfigError(f"initial: {exc}") from exc


def load_config(path) -> tuple[dict, str]:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"<config>: cannot read {path} ({exc.strerror})") from exc
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ConfigError(f"<config>: {path} is not UTF-8") from exc
    return parse_config(text, base_dir=path.parent), hashlib.sha256(data).hexdigest()


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def _write_json(path, payload):
    Path(path).write_text(json.dumps(_json_safe(payload), indent=2, sort_keys=True) + "\n")


def write_run(out: Path, traj, echo: dict, config_hash: str, extra: dict | None = None) -> None:
    """Write manifest.json, diag.csv and snapshots/t_<index>.dat for one trajectory."""
    snaps = out / "snapshots"
    snaps.mkdir(parents=True, exist_ok=True)
    for i, state in enumerate(traj.snapshots):
        write_snapshot(snaps / f"t_{i:05d}.dat", state.t, state.curve)
    write_diag_csv(out / "diag.csv", traj.diagnostics)
    first, last = traj.diagnostics[0], traj.diagnostics[-1]
    manifest = {
        "version": __version__,
        "backend": kernels.BACKEND,
        "config": echo,
        "config_sha256": config_hash,
        "completed": traj.completed,
        "abort_reason": traj.abort_reason,
        "abort_message": traj.abort_message,
        "steps": last.step,
        "final_time": last.t,
        "final_diagnostics": asdict(last),
        "area_drift": abs(last.area - first.area) / abs(first.area),
        "snapshots": len(traj.snapshots),
    }
    manifest.update(extra or {})
    _write_json(out / "manifest.json", manifest)


def _exit_code(*trajs) -> int:
    for t in trajs:
        if t.abort_reason is not None:
            return EXIT_CODES.get(t.abort_reason, EXIT_CODES["numerical"])
    return EXIT_OK


def _threads() -> int:
    raw = os.environ.get("SQGPATCH_THREADS", "2")
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"SQGPATCH_THREADS: expected a positive integer, got {raw!r}") from None
    if value < 1:
        raise ConfigError(f"SQGPATCH_THREADS: expected a positive integer, got {raw!r}")
    return value


def _run_pair(jobs):
    """Run independent (config, initial) jobs concurrently; results in input order."""
    with ThreadPoolExecutor(max_workers=min(_threads(), len(jobs))) as pool:
        futures = [pool.submit(run, cfg, init) for cfg, init in jobs]
        return [f.result() for f in futures]


def _require_fixed_dt(cfg: SimConfig, command: str):
    if cfg.dt is None:
        raise ConfigError(f"sim.dt: '{command}' compares snapshots at shared times and needs a fixed dt")


def cmd_run(config_path, out) -> int:
    parsed, digest = load_config(config_path)
    cfg = parsed["sim"]
    traj = run(cfg, build_initial(parsed["initial"], cfg.n))
    write_run(Path(out), traj, parsed["echo"], digest)
    _report(traj, "run")
    return _exit_code(traj)


def cmd_twin(config_path, out, eps: float, seed: int) -> int:
    parsed, digest = load_config(config_path)
    cfg = parsed["sim"]
    _require_fixed_dt(cfg, "twin")
    base = build_initial(parsed["initial"], cfg.n)
    try:
        twin = h1_perturbation(base, eps, seed)
    except (ValueError, SqgError) as exc:
        raise ConfigError(f"--eps: perturbation of size {eps:g} is not admissible ({exc})") from exc
    tx, ty = _run_pair([(cfg, base), (cfg, twin)])
    out = Path(out)
    write_run(out / "base", tx, parsed["echo"], digest)
    write_run(out / "perturbed", ty, parsed["echo"], digest, {"eps": eps, "seed": seed})
    n = min(len(tx.snapshots), len(ty.snapshots))
    cmp = twin_compare(tx.snapshots[:n], ty.snapshots[:n]) if n >= 3 else None
    with open(out / "twin.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "z_l2", "z_h1"])
        if cmp is not None:
            for row in zip(cmp.times, cmp.z_l2, cmp.z_h1):
                w.writerow([repr(float(v)) for v in row])
    summary = {
        "config": parsed["echo"],
        "config_sha256": digest,
        "eps": eps,
        "seed": seed,
        "growth_rate": None if cmp is None else cmp.growth_rate,
        "degenerate": None if cmp is None else cmp.degenerate,
        "abort_reason": tx.abort_reason or ty.abort_reason,
    }
    _write_json(out / "manifest.json", summary)
    rate = summary["growth_rate"]
    print(f"twin: fitted growth rate C = {rate if rate is None else format(rate, '.6g')}")
    return _exit_code(tx, ty)


def cmd_equiv(config_path, out) -> int:
    parsed, digest = load_config(config_path)
    cfg = parsed["sim"]
    _require_fixed_dt(cfg, "equiv")
    init = build_initial(parsed["initial"], cfg.n)
    cfg_r = SimConfig(**{**asdict(cfg), "formulation": "resnick"})
    cfg_p = SimConfig(**{**asdict(cfg), "formulation": "gauged_with_phi"})
    tr, tp = _run_pair([(cfg_r, init), (cfg_p, init)])
    out = Path(out)
    write_run(out / "resnick", tr, {**parsed["echo"], "sim": {**parsed["echo"]["sim"], "formulation": "resnick"}}, digest)
    write_run(out / "gauged_with_phi", tp, {**parsed["echo"], "sim": {**parsed["echo"]["sim"], "formulation": "gauged_with_phi"}}, digest)
    n = min(len(tr.snapshots), len(tp.snapshots))
    series = equivalence_compare(tr.snapshots[:n], tp.snapshots[:n])
    with open(out / "equiv.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "hausdorff", "pointwise"])
        for row in zip(series.times, series.hausdorff, series.pointwise):
            w.writerow([repr(float(v)) for v in row])
    _write_json(
        out / "manifest.json",
        {
            "config": parsed["echo"],
            "config_sha256": digest,
            "max_hausdorff": float(series.hausdorff.max()),
            "final_hausdorff": float(series.hausdorff[-1]),
            "abort_reason": tr.abort_reason or tp.abort_reason,
        },
    )
    print(f"equiv: max Hausdorff distance {series.hausdorff.max():.3e} over {n} snapshots")
    return _exit_code(tr, tp)


def cmd_oracle() -> int:
    print("tolerances: " + ", ".join(f"{k}={v:g}" for k, v in TOLERANCES.items()))
    results = run_oracles(stream=sys.stdout)
    failed = [r.name for r in results if not r.passed]
    if failed:
        print("FAILED: " + ", ".join(failed))
        return EXIT_ORACLE_FAIL
    return EXIT_OK


def _report(traj, label):
    if traj.abort_reason:
        print(f"{label}: aborted ({traj.abort_reason}) at t={traj.final.t:.6g}: {traj.abort_message}", file=sys.stderr)
    else:
        print(f"{label}: completed t={traj.final.t:.6g} in {traj.final.step} steps")


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sqgpatch", description="Contour dynamics for SQG patches.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress at INFO level")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("run", "integrate one configuration"),
        ("twin", "run a base and an eps-perturbed trajectory and fit the separation rate"),
        ("equiv", "compare the Resnick and gauged-with-phi formulations"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="TOML configuration file")
        p.add_argument("--out", required=True, help="output directory")
        if name == "twin":
            p.add_argument("--eps", type=float, default=1e-6, help="H1 size of the perturbation")
            p.add_argument("--seed", type=_seed, default=0, help="perturbation seed (u64)")
    sub.add_parser("oracle", help="run the reference checks and print a PASS/FAIL table")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            return cmd_run(args.config, args.out)
        if args.command == "twin":
            if not args.eps > 0:
                raise ConfigError("--eps: must be positive")
            return cmd_twin(args.config, args.out, args.eps, args.seed)
        if args.command == "equiv":
            return cmd_equiv(args.config, args.out)
        return cmd_oracle()
    except ConfigError as exc:
        print(f"sqgpatch: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SqgError as exc:
        print(f"sqgpatch: {exc.reason}: {exc}", file=sys.stderr)
        return EXIT_CODES.get(exc.reason, EXIT_CODES["numerical"])


if __name__ == "__main__":
    sys.exit(main())
