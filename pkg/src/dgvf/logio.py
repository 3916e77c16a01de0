"""Reading and writing trajectory logs, run summaries and reports.

Per-robot log layout (one row per robot per logged tick, fixed column order)::

    t, robot, alive, x1..xn, omega, omega_hat, phi1..phin, u1..un, u_omega, eta

``robot`` is 1-based. Floats are written as the shortest repr that
round-trips exactly, so re-analysing a log reproduces the original report.
Scalar per-tick series (target coordinate, Lyapunov terms, minimum gaps)
go to ``globals.csv``; metadata, events and the scenario config go to
``summary.json`` next to the log.
"""
from __future__ import annotations

import csv
import gzip
import io
import json
import math
from pathlib import Path

import numpy as np

from .errors import ConfigurationError

GLOBAL_COLUMNS = ("t", "omega_star", "V", "Omega", "min_gap", "min_distance")
SUMMARY_NAME = "summary.json"


def log_columns(n: int) -> list:
    return (
        ["t", "robot", "alive"]
        + [f"x{j}" for j in range(1, n + 1)]
        + ["omega", "omega_hat"]
        + [f"phi{j}" for j in range(1, n + 1)]
        + [f"u{j}" for j in range(1, n + 1)]
        + ["u_omega", "eta"]
    )


def _num(v) -> str:
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)


def _rows(log):
    T, N = log.omega.shape
    for ti in range(T):
        t = _num(log.t[ti])
        for i in range(N):
            yield [t, str(i + 1), "1" if log.alive[ti, i] else "0"] + [
                _num(v)
                for v in (
                    *log.x[ti, i], log.omega[ti, i], log.omega_hat[ti, i], *log.phi[ti, i],
                    *log.u[ti, i], log.u_omega[ti, i], log.eta[ti, i],
                )
            ]


def _open_write(path: Path, compress: bool):
    if compress:
        # fixed mtime and no embedded filename keep compressed logs byte-identical across runs
        raw = open(path, "wb")
        gz = gzip.GzipFile(filename="", mode="wb", fileobj=raw, mtime=0)
        return io.TextIOWrapper(gz, encoding="utf-8", newline=""), (gz, raw)
    fh = open(path, "w", encoding="utf-8", newline="")
    return fh, ()


def _close(fh, extra):
    fh.close()
    for obj in extra:
        obj.close()


def _open_read(path: Path):
    if path.suffix == ".gz":
        return io.TextIOWrapper(gzip.open(path, "rb"), encoding="utf-8", newline="")
    return open(path, "r", encoding="utf-8", newline="")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    return obj


def write_json(path, data) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def write_log(log, directory, fmt: str = "csv", compress: bool = False, config: dict | None = None) -> dict:
    """Write trajectory, global series and summary into ``directory``; returns the written paths."""
    if fmt not in ("csv", "jsonl"):
        raise ConfigurationError(f"unknown log format {fmt!r}")
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    suffix = ".gz" if compress else ""
    cols = log_columns(log.dimension)
    traj = out / f"trajectory.{fmt}{suffix}"
    fh, extra = _open_write(traj, compress)
    try:
        if fmt == "csv":
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            w.writerows(_rows(log))
        else:
            for row in _rows(log):
                rec = {c: (int(v) if c in ("robot", "alive") else float(v)) for c, v in zip(cols, row)}
                fh.write(json.dumps(rec, allow_nan=True) + "\n")
    finally:
        _close(fh, extra)

    glob = out / f"globals.csv{suffix}"
    fh, extra = _open_write(glob, compress)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(GLOBAL_COLUMNS)
        for ti in range(log.t.size):
            w.writerow([_num(log.t[ti]), _num(log.omega_star[ti]), _num(log.V[ti]), _num(log.Omega[ti]),
                        _num(log.min_gap[ti]), _num(log.min_distance[ti])])
    finally:
        _close(fh, extra)

    meta = {k: v for k, v in log.meta.items() if k != "runtime_s"}
    summary = {
        "meta": meta,
        "events": log.events,
        "clamp_events": log.clamp_events,
        "format": fmt,
        "columns": cols,
        "trajectory": traj.name,
        "globals": glob.name,
    }
    if config is not None:
        summary["config"] = config
    summ = write_json(out / SUMMARY_NAME, summary)
    return {"trajectory": traj, "globals": glob, "summary": summ}


def _float(v: str) -> float:
    return float(v)


def _read_records(path: Path):
    name = path.name[:-3] if path.name.endswith(".gz") else path.name
    with _open_read(path) as fh:
        if name.endswith(".jsonl"):
            recs = [json.loads(line) for line in fh if line.strip()]
            if not recs:
                raise ConfigurationError(f"empty log {path}")
            cols = list(recs[0])
            return cols, [[r[c] for c in cols] for r in recs]
        reader = csv.reader(fh)
        try:
            cols = next(reader)
        except StopIteration:
            raise ConfigurationError(f"empty log {path}") from None
        return cols, [row for row in reader]


def read_log(path):
    """Rebuild a :class:`~dgvf.sim.TrajectoryLog` from a written log file (or its directory)."""
    from .sim import TrajectoryLog

    path = Path(path)
    if path.is_dir():
        cands = sorted(path.glob("trajectory.*"))
        if not cands:
            raise ConfigurationError(f"no trajectory log in {path}")
        path = cands[0]
    if not path.exists():
        raise ConfigurationError(f"log file {path} does not exist")
    cols, rows = _read_records(path)
    n = sum(1 for c in cols if c.startswith("phi"))
    if cols != log_columns(n):
        raise ConfigurationError(f"unexpected log columns in {path}")
    data = np.array([[_float(v) for v in row] for row in rows], dtype=float)
    robots = data[:, 1].astype(int)
    N = int(robots.max())
    if data.shape[0] % N:
        raise ConfigurationError("log rows do not form complete ticks")
    T = data.shape[0] // N
    data = data.reshape(T, N, -1)
    if not np.array_equal(data[:, :, 1].astype(int), np.tile(np.arange(1, N + 1), (T, 1))):
        raise ConfigurationError("log rows are not ordered tick-major, robot-minor")
    c = {name: i for i, name in enumerate(cols)}
    xs = [c[f"x{j}"] for j in range(1, n + 1)]
    ps = [c[f"phi{j}"] for j in range(1, n + 1)]
    us = [c[f"u{j}"] for j in range(1, n + 1)]

    summary = {}
    spath = path.parent / SUMMARY_NAME
    if spath.exists():
        summary = json.loads(spath.read_text(encoding="utf-8"))
    meta = summary.get("meta", {})
    glob = {k: np.full(T, np.nan) for k in GLOBAL_COLUMNS[1:]}
    gname = summary.get("globals")
    if gname and (path.parent / gname).exists():
        gcols, grows = _read_records(path.parent / gname)
        g = np.array([[_float(v) for v in row] for row in grows], dtype=float)
        if g.shape[0] == T:
            for j, name in enumerate(gcols[1:], start=1):
                glob[name] = g[:, j]

    return TrajectoryLog(
        t=data[:, 0, c["t"]].copy(),
        x=data[:, :, xs],
        omega=data[:, :, c["omega"]],
        omega_hat=data[:, :, c["omega_hat"]],
        phi=data[:, :, ps],
        u=data[:, :, us],
        u_omega=data[:, :, c["u_omega"]],
        eta=data[:, :, c["eta"]],
        alive=data[:, :, c["alive"]] > 0.5,
        neighbor_count=np.zeros((T, N), dtype=int),
        omega_star=glob["omega_star"],
        V=glob["V"],
        Omega=glob["Omega"],
        min_gap=glob["min_gap"],
        min_distance=glob["min_distance"],
        events=summary.get("events", []),
        clamp_events=summary.get("clamp_events", []),
        meta=meta,
    )


def write_report(report, directory, checks=None) -> dict:
    """Write ``report.json`` (machine-readable) and ``report.txt`` (human-readable)."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    data = report.to_dict()
    if checks is not None:
        data["conditions"] = [{"condition": c.condition, "status": c.status, "message": c.message} for c in checks]
    js = write_json(out / "report.json", data)
    text = report.summary()
    if checks:
        text = "\n".join(c.line() for c in checks) + "\n\n" + text
    txt = out / "report.txt"
    txt.write_text(text + "\n", encoding="utf-8")
    return {"json": js, "text": txt}
