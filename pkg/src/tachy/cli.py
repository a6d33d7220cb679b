"""Command-line front end: ``tachy scenario|sweep|recover|transform``.

Config files are flat JSON objects; command-line flags override them.
Exit codes: 0 ok, 2 configuration error, 3 solver did not converge.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from typing import Any

import numpy as np

from .experiment import (
    Collinear,
    ExperimentConfig,
    Transverse,
    detour_sweep,
    run_collinear,
    run_transverse,
)
from .ftl import FtlSpeed
from .kinematics import (
    Boost,
    Divergent,
    Event,
    Frame,
    Velocity,
    boost_event,
    compose_velocity_to_lab,
    compose_velocity_to_preferred,
    inverse_boost_event,
)
from .solver import (
    DirectionalMeasurement,
    InsufficientData,
    NoConvergence,
    forward_measurements,
    recover_frame,
    with_noise,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NO_CONVERGENCE = 3


class ConfigError(Exception):
    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


class Formatter:
    def __init__(self, digits: int = 15):
        self.digits = digits

    def __call__(self, x: Any) -> str:
        if x is None:
            return "-"
        if isinstance(x, bool):
            return "true" if x else "false"
        if isinstance(x, (int, float, np.floating)):
            return format(float(x), f".{self.digits}g")
        return str(x)


def write_atomic(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tachy-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(text: str, output: str | None) -> None:
    if output:
        write_atomic(output, text)
    else:
        sys.stdout.write(text)


# -- config handling ---------------------------------------------------------

def load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError([f"cannot read config {path}: {exc}"])
    if not isinstance(data, dict):
        raise ConfigError([f"config {path} must hold a JSON object"])
    return data


def merged(args: argparse.Namespace, keys: list[str]) -> dict:
    cfg = load_config(getattr(args, "config", None))
    for k in keys:
        val = getattr(args, k, None)
        if val is not None:
            cfg[k] = val
    return cfg


def parse_velocity(raw: Any, errors: list[str], name: str = "v") -> Velocity | None:
    try:
        if isinstance(raw, (list, tuple)):
            comps = [float(c) for c in raw]
        elif isinstance(raw, str) and "," in raw:
            comps = [float(c) for c in raw.split(",")]
        else:
            comps = [float(raw)]
        comps += [0.0] * (3 - len(comps))
        if len(comps) != 3:
            raise ValueError("expected 1 to 3 components")
        v = Velocity(*comps)
    except (TypeError, ValueError) as exc:
        errors.append(f"{name}: {exc}")
        return None
    return v


def parse_frame_velocity(raw: Any, errors: list[str]) -> Velocity | None:
    if raw is None:
        errors.append("v is required")
        return None
    v = parse_velocity(raw, errors)
    if v is not None and v.speed() >= 1.0:
        errors.append(f"v: |v| = {v.speed()!r} must be < 1")
        return None
    return v


def parse_ftl(raw: Any, errors: list[str], name: str = "ftl") -> FtlSpeed | None:
    try:
        return FtlSpeed.parse(raw)
    except (TypeError, ValueError) as exc:
        errors.append(f"{name}: {exc}")
        return None


def parse_positive(cfg: dict, key: str, errors: list[str], default: float | None = None) -> float | None:
    raw = cfg.get(key, default)
    if raw is None:
        errors.append(f"{key} is required")
        return None
    try:
        val = float(raw)
    except (TypeError, ValueError):
        errors.append(f"{key}: not a number: {raw!r}")
        return None
    if not (math.isfinite(val) and val > 0.0):
        errors.append(f"{key}: must be finite and > 0, got {raw!r}")
        return None
    return val


def parse_grid(raw: Any, key: str, errors: list[str]) -> list[float] | None:
    if raw is None:
        errors.append(f"{key} is required")
        return None
    try:
        if isinstance(raw, dict):
            grid = np.linspace(float(raw["start"]), float(raw["stop"]), int(raw["num"])).tolist()
        elif isinstance(raw, str):
            grid = [float(x) for x in raw.split(",") if x.strip()]
        else:
            grid = [float(x) for x in raw]
    except (KeyError, TypeError, ValueError) as exc:
        errors.append(f"{key}: cannot parse grid ({exc})")
        return None
    if not grid:
        errors.append(f"{key}: grid is empty")
        return None
    if any(not (math.isfinite(x) and x >= 0.0) for x in grid):
        errors.append(f"{key}: entries must be finite and >= 0")
        return None
    return grid


def arm_lengths(cfg: dict, errors: list[str]) -> tuple[float | None, float | None]:
    l_default = cfg.get("l", 1.0)
    return (parse_positive(cfg, "l1", errors, l_default),
            parse_positive(cfg, "l2", errors, l_default))


# -- scenario ------------------------------------------------------------------

def _scenario_config(name: str, cfg: dict) -> tuple[ExperimentConfig, float | None]:
    errors: list[str] = []
    ftl_raw = cfg.get("ftl", cfg.get("ubar"))
    if name == "B":
        # vu/c^2 = 1 picks the missing one of v and ubar
        if cfg.get("v") is None and ftl_raw is not None:
            try:
                cfg["v"] = 1.0 / float(ftl_raw)
            except (TypeError, ValueError, ZeroDivisionError):
                pass
        if ftl_raw is None and cfg.get("v") is not None:
            try:
                ftl_raw = 1.0 / float(cfg["v"])
            except (TypeError, ValueError, ZeroDivisionError):
                errors.append(f"v: not a number: {cfg['v']!r}")
    if ftl_raw is None:
        ftl_raw = "inf" if name == "A" else 2.0
    v = parse_frame_velocity(cfg.get("v"), errors)
    ftl = parse_ftl(ftl_raw, errors)
    l1, l2 = arm_lengths(cfg, errors)
    uy = None
    if name == "C":
        if cfg.get("uy_prime") is not None:
            uy = parse_positive(cfg, "uy_prime", errors)
            if uy is not None and uy <= 1.0:
                errors.append(f"uy_prime: must exceed 1, got {uy!r}")
    if errors:
        raise ConfigError(errors)
    geom = Transverse(l1, l2) if name == "C" else Collinear(l1, l2)
    return ExperimentConfig(v, ftl, geom), uy


def scenario_report(name: str, cfg: dict, digits: int = 15) -> dict:
    exp, uy = _scenario_config(name, cfg)
    if name == "C":
        res = run_transverse(exp, uy)
        o = res.outcome
    else:
        res = None
        o = run_collinear(exp)
    d1, d2 = o.detections
    l1, l2 = o.detections_lab
    rep: dict[str, Any] = {
        "scenario": name,
        "v": list(exp.v.as_tuple()),
        "ftl": str(o.config.ftl),
        "x1": d1.x, "y1": d1.y, "t1": d1.t,
        "x2": d2.x, "y2": d2.y, "t2": d2.t,
        "x1_prime": l1.x, "y1_prime": l1.y, "t1_prime": l1.t,
        "x2_prime": l2.x, "y2_prime": l2.y, "t2_prime": l2.t,
        "first_in_S": o.first_in_s.value,
        "order_class": o.order_class.value,
        "interval_s2": o.pair_interval.s2,
    }
    arr = o.ftl_arrival
    arr_lab = o.ftl_arrival_lab
    rep.update({
        "tF": arr.t if arr else None,
        "xF": arr.x if arr else None,
        "tF_prime": arr_lab.t if arr_lab else None,
        "xF_prime": arr_lab.x if arr_lab else None,
        "yF_prime": arr_lab.y if arr_lab else None,
        "correlated": o.correlated,
        "boundary": o.boundary,
    })
    nar = o.narrative()
    if nar is not None:
        rep.update({
            "narrative": nar.kind.value,
            "back_signal_distance": nar.distance,
            "back_signal_duration": nar.duration,
            "back_signal_speed": nar.speed,
        })
    if res is not None:
        rep.update({"uy_prime": res.uy_prime, "ubar_x": res.ubar_x,
                    "ubar_y": res.ubar_y, "ubar": res.ubar})
    return rep


def render_report(rep: dict, digits: int) -> str:
    f = Formatter(digits)
    width = max(len(k) for k in rep)
    lines = []
    for k, val in rep.items():
        if isinstance(val, list):
            val = ",".join(f(c) for c in val)
        lines.append(f"{k.ljust(width)}  {f(val)}")
    return "\n".join(lines) + "\n"


def render_json(obj: dict, digits: int) -> str:
    f = Formatter(digits)

    def conv(x):
        if isinstance(x, bool) or x is None or isinstance(x, str):
            return x
        if isinstance(x, list):
            return [conv(c) for c in x]
        # round-trip through the fixed-precision text so files stay byte-stable
        return float(f(x))

    return json.dumps({k: conv(v) for k, v in obj.items()}, indent=2) + "\n"


def cmd_scenario(args) -> int:
    cfg = merged(args, ["v", "l", "l1", "l2", "ftl", "ubar", "uy_prime", "precision", "output"])
    digits = int(cfg.get("precision", 15))
    rep = scenario_report(args.name, cfg, digits)
    text = render_json(rep, digits) if args.json else render_report(rep, digits)
    emit(text, cfg.get("output"))
    return EXIT_OK


# -- sweep --------------------------------------------------------------------

def cmd_sweep(args) -> int:
    cfg = merged(args, ["v", "ftl", "l", "l1", "l2", "left_grid", "right_grid", "output", "precision"])
    errors: list[str] = []
    v = parse_frame_velocity(cfg.get("v"), errors)
    ftl = parse_ftl(cfg.get("ftl", cfg.get("ubar", "inf")), errors)
    l1, l2 = arm_lengths(cfg, errors)
    lg = parse_grid(cfg.get("left_grid"), "left_grid", errors)
    rg = parse_grid(cfg.get("right_grid"), "right_grid", errors)
    if errors:
        raise ConfigError(errors)
    workers = args.workers
    cap = os.environ.get("TACHY_THREADS")
    if cap:
        workers = min(workers or int(cap), int(cap))
    table = detour_sweep(ExperimentConfig(v, ftl, Collinear(l1, l2)), lg, rg, workers=workers or 1)
    emit(table.to_csv(), cfg.get("output"))
    return EXIT_OK


# -- recover ------------------------------------------------------------------

def read_measurements(path: str) -> list[DirectionalMeasurement]:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise ConfigError([f"cannot read {path}: {exc}"])
    errors = []
    out = []
    for n, row in enumerate(rows, start=2):
        try:
            sigma = row.get("sigma")
            out.append(DirectionalMeasurement(float(row["phi"]), float(row["u_prime"]),
                                              float(sigma) if sigma not in (None, "") else None))
        except (KeyError, TypeError, ValueError) as exc:
            errors.append(f"{path}:{n}: {exc}")
    if errors:
        raise ConfigError(errors)
    return out


def measurements_csv(ms: list[DirectionalMeasurement], digits: int = 15) -> str:
    f = Formatter(digits)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["phi", "u_prime", "sigma"])
    for m in ms:
        w.writerow([f(m.phi), f(m.u_prime), "" if m.sigma is None else f(m.sigma)])
    return buf.getvalue()


def cmd_recover(args) -> int:
    cfg = merged(args, ["truth_speed", "truth_orientation", "ubar", "n_angles", "noise",
                        "seed", "output", "precision", "measurements_out"])
    digits = int(cfg.get("precision", 15))
    if args.measurements:
        ms = read_measurements(args.measurements)
    else:
        errors: list[str] = []
        if cfg.get("truth_speed") is None:
            errors.append("either a measurements CSV or --truth-speed is required")
        ftl = parse_ftl(cfg.get("ubar", 10.0), errors, "ubar")
        if errors:
            raise ConfigError(errors)
        v = parse_frame_velocity(float(cfg["truth_speed"]), errors)
        if errors:
            raise ConfigError(errors)
        v = Velocity.polar(v.speed(), float(cfg.get("truth_orientation", 0.0)))
        n = int(cfg.get("n_angles", 8))
        ms = forward_measurements(v, ftl, [2.0 * math.pi * k / n for k in range(n)])
        noise = float(cfg.get("noise", 0.0))
        if noise > 0.0:
            ms = with_noise(ms, noise, np.random.default_rng(int(cfg.get("seed", 0))))
        if cfg.get("measurements_out"):
            write_atomic(cfg["measurements_out"], measurements_csv(ms, digits))
    try:
        res = recover_frame(ms)
    except InsufficientData as exc:
        raise ConfigError([str(exc)])
    except NoConvergence as exc:
        print(f"tachy: no convergence: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    emit(render_json(res.to_json(), digits), cfg.get("output"))
    return EXIT_OK


# -- transform ----------------------------------------------------------------

def cmd_transform(args) -> int:
    errors: list[str] = []
    v = parse_frame_velocity(args.v, errors)
    if errors:
        raise ConfigError(errors)
    b = Boost(v)
    f = Formatter(args.precision)
    if args.kind == "event":
        if args.to == "lab":
            out = boost_event(Event(args.t, args.x, args.y, args.z, Frame.PREFERRED), b)
        else:
            out = inverse_boost_event(Event(args.t, args.x, args.y, args.z, Frame.LAB), b)
        text = f"t={f(out.t)} x={f(out.x)} y={f(out.y)} z={f(out.z)} frame={out.frame.name.lower()}\n"
    else:
        u = Velocity(args.ux, args.uy, args.uz)
        try:
            out = (compose_velocity_to_lab if args.to == "lab" else compose_velocity_to_preferred)(u, b)
        except Divergent as exc:
            print(f"divergent: {exc}")
            return EXIT_OK
        text = f"ux={f(out.vx)} uy={f(out.vy)} uz={f(out.vz)} speed={f(out.speed())}\n"
    sys.stdout.write(text)
    return EXIT_OK


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tachy", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    sc = sub.add_parser("scenario", help="run collinear (A, B) or transverse (C) scenarios")
    sc.add_argument("name", choices=["A", "B", "C"])
    sc.add_argument("--config")
    sc.add_argument("--v", help="lab speed along x, or vx,vy,vz")
    sc.add_argument("--l", type=float, help="arm length for both detectors")
    sc.add_argument("--l1", type=float)
    sc.add_argument("--l2", type=float)
    sc.add_argument("--ftl", help="preferred-frame FTL speed (> 1) or 'inf'")
    sc.add_argument("--ubar", help="alias of --ftl")
    sc.add_argument("--uy-prime", dest="uy_prime", type=float, help="lab transverse FTL speed (C)")
    sc.add_argument("--precision", type=int)
    sc.add_argument("--json", action="store_true")
    sc.add_argument("--output")
    sc.set_defaults(func=cmd_scenario)

    sw = sub.add_parser("sweep", help="detour sweep to CSV")
    sw.add_argument("config", nargs="?")
    sw.add_argument("--v")
    sw.add_argument("--ftl")
    sw.add_argument("--l", type=float)
    sw.add_argument("--l1", type=float)
    sw.add_argument("--l2", type=float)
    sw.add_argument("--left-grid", dest="left_grid", help="comma list of added path lengths")
    sw.add_argument("--right-grid", dest="right_grid")
    sw.add_argument("--workers", type=int)
    sw.add_argument("--output")
    sw.set_defaults(func=cmd_sweep)

    rc = sub.add_parser("recover", help="recover the lab velocity from directional FTL speeds")
    rc.add_argument("measurements", nargs="?", help="CSV with columns phi,u_prime,sigma")
    rc.add_argument("--config")
    rc.add_argument("--truth-speed", dest="truth_speed", type=float, help="synthesise data instead")
    rc.add_argument("--truth-orientation", dest="truth_orientation", type=float)
    rc.add_argument("--ubar")
    rc.add_argument("--n-angles", dest="n_angles", type=int)
    rc.add_argument("--noise", type=float)
    rc.add_argument("--seed", type=int)
    rc.add_argument("--measurements-out", dest="measurements_out")
    rc.add_argument("--precision", type=int)
    rc.add_argument("--output")
    rc.set_defaults(func=cmd_recover)

    tr = sub.add_parser("transform", help="boost an event or compose a velocity")
    tr.add_argument("kind", choices=["event", "velocity"])
    tr.add_argument("--v", required=True)
    tr.add_argument("--to", choices=["lab", "preferred"], default="lab")
    for name in ("t", "x", "y", "z", "ux", "uy", "uz"):
        tr.add_argument(f"--{name}", type=float, default=0.0)
    tr.add_argument("--precision", type=int, default=15)
    tr.set_defaults(func=cmd_transform)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_CONFIG
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        errs = exc.errors if isinstance(exc, ConfigError) else [str(exc)]
        for e in errs:
            print(f"tachy: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
