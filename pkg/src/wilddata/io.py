"""CSV/JSON serialization of grids, fields and reports.

Floats are written with 17 significant digits, so CSV round trips are exact.
No timestamps or host data are written, so identical inputs give identical
files.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .evolve import SpaceTimeField
from .glimm import Grid1D
from .riemann import WaveFan
from .surgery import TorusField
from .thermo import ThermoParams
from .verify import EQUATIONS, ResidualReport

FMT = "%.17g"


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    return obj


def write_json(path, obj):
    Path(path).write_text(json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n")


def read_json(path):
    return json.loads(Path(path).read_text())


def _write_table(path, columns: dict, comments=()):
    names = list(columns)
    arr = np.column_stack([np.asarray(columns[n], dtype=float).ravel() for n in names])
    with open(path, "w") as fh:
        for c in comments:
            fh.write(f"# {c}\n")
        fh.write(",".join(names) + "\n")
        np.savetxt(fh, arr, fmt=FMT, delimiter=",")


def _read_table(path):
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    names = lines[0].strip().split(",")
    arr = np.loadtxt(lines[1:], delimiter=",", ndmin=2)
    return {n: arr[:, j] for j, n in enumerate(names)}


# ---------------------------------------------------------------------------
# 1D grids and fans

def write_grid1d(path, g: Grid1D, params: ThermoParams):
    W = g.primitive(params.c_v)
    rho, th = W[0], W[1]
    _write_table(path, {
        "x": g.x, "rho": rho, "theta": th, "u1": W[2], "u2": W[3],
        "p": rho * th, "s": params.c_v * np.log(th) - np.log(rho),
    }, comments=[f"t={g.t!r} h={g.h!r} c_v={params.c_v!r}"])


def write_fan_samples(path, fan: WaveFan, xi, params: ThermoParams):
    xi = np.asarray(xi, dtype=float)
    W = fan.sample_array(xi)
    rho, th = W[0], W[1]
    _write_table(path, {
        "xi": xi, "rho": rho, "theta": th, "u1": W[2], "u2": W[3],
        "p": rho * th, "s": params.c_v * np.log(th) - np.log(rho),
    })


def fan_summary(fan: WaveFan) -> dict:
    return {
        "p_star": fan.p_star,
        "u_star": fan.contact,
        "star_left": fan.star_left.as_array(),
        "star_right": fan.star_right.as_array(),
        "left_wave": {"kind": fan.left_wave.kind, "speeds": list(fan.left_wave.speeds)},
        "right_wave": {"kind": fan.right_wave.kind, "speeds": list(fan.right_wave.speeds)},
        "lambda": fan.lam,
        "iterations": fan.iterations,
        "has_shock": fan.has_shock,
    }


# ---------------------------------------------------------------------------
# torus fields

def write_torus(path, f: TorusField, sidecar: dict | None = None):
    """CSV ``x1,x2,rho,theta,u1,u2`` (x1-major) plus ``<path>.json``."""
    X1, X2 = np.meshgrid(f.x1, f.x2, indexing="ij")
    _write_table(path, {"x1": X1, "x2": X2, "rho": f.data[0], "theta": f.data[1],
                        "u1": f.data[2], "u2": f.data[3]})
    meta = {"nx": f.nx, "ny": f.ny, "t": f.t}
    meta.update(sidecar or {})
    write_json(str(path) + ".json", meta)


def read_torus(path) -> tuple[TorusField, dict]:
    meta = read_json(str(path) + ".json")
    cols = _read_table(path)
    nx, ny = int(meta["nx"]), int(meta["ny"])
    data = np.stack([cols[n].reshape(nx, ny) for n in ("rho", "theta", "u1", "u2")])
    return TorusField(data, meta.get("t")), meta


# ---------------------------------------------------------------------------
# space-time fields

def write_spacetime(directory, f: SpaceTimeField, manifest: dict | None = None):
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    files = []
    for k in range(len(f)):
        name = f"snapshot_{k:04d}.csv"
        X1, X2 = np.meshgrid(f.snapshot(k).x1, f.snapshot(k).x2, indexing="ij")
        W = f.data[k]
        _write_table(d / name, {"x1": X1, "x2": X2, "rho": W[0], "theta": W[1],
                                "u1": W[2], "u2": W[3]})
        files.append(name)
    meta = {"times": list(f.times), "grid": [f.nx, f.ny], "files": files}
    meta.update(f.meta)
    meta.update(manifest or {})
    write_json(d / "manifest.json", meta)


def read_spacetime(directory) -> SpaceTimeField:
    d = Path(directory)
    meta = read_json(d / "manifest.json")
    nx, ny = meta["grid"]
    frames = []
    for name in meta["files"]:
        cols = _read_table(d / name)
        frames.append(np.stack([cols[n].reshape(nx, ny) for n in ("rho", "theta", "u1", "u2")]))
    skip = {"times", "grid", "files"}
    return SpaceTimeField(np.array(meta["times"], dtype=float), np.stack(frames),
                          {k: v for k, v in meta.items() if k not in skip})


# ---------------------------------------------------------------------------
# residual reports

def write_report(prefix, rep: ResidualReport):
    """``<prefix>.json`` with per-test records and ``<prefix>.csv`` summary."""
    write_json(str(prefix) + ".json", {
        "summary": rep.summary(),
        "tests": rep.records(),
        "skipped": rep.skipped,
        "bounds": rep.bounds,
    })
    cols = {"test": np.arange(len(rep.tests))}
    for j, eq in enumerate(EQUATIONS[:4]):
        cols[eq] = rep.magnitudes[:, j] if len(rep.tests) else np.zeros(0)
    cols["entropy"] = rep.entropy if len(rep.tests) else np.zeros(0)
    if rep.norms is not None:
        cols["weight_norm"] = rep.norms
    _write_table(str(prefix) + ".csv", cols)
