"""On-disk formats: system JSON, trajectory CSV + sidecar, result files.

All floats are written with repr(), which round-trips exactly, and CSV
uses the default excel dialect (CRLF, minimal quoting).  Nothing here
embeds timestamps, so identical runs produce identical bytes.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import os

import numpy as np

from .certify import BoundCertificate, CampaignResult
from .core import FracSystem
from .errors import DataError
from .forecast import WindowedForecast
from .ident import OlsEstimate
from .sim import Trajectory, TrajectoryMeta


def _fmt(x) -> str:
    return repr(float(x))


def load_system(path) -> FracSystem:
    """Read the canonical system description JSON."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read system file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"system file {path} is not valid JSON: {exc}") from exc
    for key in ("n", "alpha", "A"):
        if key not in raw:
            raise DataError(f"system file {path} is missing key {key!r}")
    try:
        system = FracSystem(alpha=np.asarray(raw["alpha"], dtype=float),
                            A=np.asarray(raw["A"], dtype=float),
                            B=None if raw.get("B") is None
                            else np.asarray(raw["B"], dtype=float),
                            sigma=float(raw.get("sigma", 0.0)))
    except (ValueError, TypeError) as exc:
        raise DataError(f"system file {path} is invalid: {exc}") from exc
    if system.n != int(raw["n"]):
        raise DataError(f"system file {path}: declared n={raw['n']} "
                        f"disagrees with alpha length {system.n}")
    return system


def save_system(system: FracSystem, path) -> None:
    doc = {
        "n": system.n,
        "alpha": system.alpha.tolist(),
        "A": system.A.tolist(),
        "B": None if system.B is None else system.B.tolist(),
        "sigma": system.sigma,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """Header k, x1..xn[, u1..um]; input cells are blank on the final row."""
    n = traj.n
    m = 0 if traj.inputs is None else traj.inputs.shape[1]
    header = ["k"] + [f"x{i + 1}" for i in range(n)] + [f"u{i + 1}" for i in range(m)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for k in range(traj.K + 1):
            row = [str(k)] + [_fmt(v) for v in traj.states[k]]
            if m:
                row += [_fmt(v) for v in traj.inputs[k]] if k < traj.K else [""] * m
            writer.writerow(row)


def write_trajectory_meta(traj: Trajectory, path, extra: dict | None = None) -> None:
    doc = {
        "seed": traj.meta.seed,
        "stream": traj.meta.stream,
        "generator": traj.meta.generator,
        "sigma": traj.meta.sigma,
        "sigma_u": traj.meta.sigma_u,
    }
    if extra:
        doc.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def read_trajectory_csv(path, meta_path=None) -> Trajectory:
    """Rebuild a trajectory from its CSV (and sidecar metadata when present)."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [row for row in csv.reader(fh) if row]
    except OSError as exc:
        raise DataError(f"cannot read trajectory file {path}: {exc}") from exc
    if not rows or rows[0][:1] != ["k"]:
        raise DataError(f"{path} is not a trajectory CSV (expected 'k' header)")
    header = rows[0]
    x_cols = [i for i, name in enumerate(header) if name.startswith("x")]
    u_cols = [i for i, name in enumerate(header) if name.startswith("u")]
    if not x_cols:
        raise DataError(f"{path} has no state columns")
    data = rows[1:]
    if len(data) < 2:
        raise DataError(f"{path} holds fewer than 2 samples")
    try:
        states = np.array([[float(row[i]) for i in x_cols] for row in data])
        inputs = None
        if u_cols:
            inputs = np.array([[float(row[i]) for i in u_cols] for row in data[:-1]])
    except (ValueError, IndexError) as exc:
        raise DataError(f"malformed trajectory row in {path}: {exc}") from exc

    meta = TrajectoryMeta(seed=None, generator="file")
    if meta_path is None:
        candidate = os.path.splitext(str(path))[0] + ".meta.json"
        meta_path = candidate if os.path.exists(candidate) else None
    if meta_path is not None:
        try:
            with open(meta_path, encoding="utf-8") as fh:
                raw = json.load(fh)
            meta = TrajectoryMeta(seed=raw.get("seed"),
                                  generator=raw.get("generator", "file"),
                                  sigma=raw.get("sigma"),
                                  sigma_u=raw.get("sigma_u"),
                                  stream=raw.get("stream", 0))
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot read trajectory metadata {meta_path}: {exc}") from exc
    return Trajectory(states=states, inputs=inputs, noises=None, meta=meta)


def write_estimate_json(est: OlsEstimate, path, provenance: dict | None = None) -> None:
    doc = {
        "Atilde_hat": est.Atilde_hat.tolist(),
        "p": est.p,
        "mode": est.mode,
        "residual_rss": est.residual_rss,
        "min_singular_value": est.regressor_min_singular_value,
        "degenerate": est.degenerate,
        "K_used": est.K_used,
    }
    if provenance:
        doc["provenance"] = provenance
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def write_certificate_json(cert: BoundCertificate, path,
                           provenance: dict | None = None) -> None:
    doc = dataclasses.asdict(cert)
    if provenance:
        doc["provenance"] = provenance
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def write_campaign_csv(result: CampaignResult, path) -> None:
    """Warnings ride along as leading comment lines above the header."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for warning in result.warnings:
            fh.write(f"# warning: {warning}\r\n")
        writer = csv.writer(fh)
        writer.writerow(["K", "k", "median_err", "p90_err", "bound",
                         "coverage", "burn_in"])
        for row in result.rows:
            writer.writerow([str(row.K), str(row.k), _fmt(row.median_err),
                             _fmt(row.p90_err), _fmt(row.bound),
                             _fmt(row.coverage),
                             "true" if row.burn_in else "false"])


def read_campaign_csv(path) -> list[dict]:
    """Parse a campaign table back into row dictionaries (tests, plotting)."""
    with open(path, newline="", encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    out = []
    for row in reader:
        out.append({
            "K": int(row["K"]), "k": int(row["k"]),
            "median_err": float(row["median_err"]),
            "p90_err": float(row["p90_err"]),
            "bound": float(row["bound"]),
            "coverage": float(row["coverage"]),
            "burn_in": row["burn_in"] == "true",
        })
    return out


def write_predictions_csv(fc: WindowedForecast, series: np.ndarray, path) -> None:
    """Rows k, x1..xn, xhat1..xhatn for every predicted step."""
    n = fc.channels
    header = (["k"] + [f"x{i + 1}" for i in range(n)]
              + [f"xhat{i + 1}" for i in range(n)])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for idx, pred in zip(fc.indices, fc.predictions):
            row = ([str(int(idx))] + [_fmt(v) for v in series[int(idx)]]
                   + [_fmt(v) for v in pred])
            writer.writerow(row)


def write_sweep_csv(rows, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["window_size", "rmse"])
        for ws, rmse in rows:
            writer.writerow([str(int(ws)), _fmt(rmse)])


def write_json(doc: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
