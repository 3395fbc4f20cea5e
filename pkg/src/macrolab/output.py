"""Bit-stable serialization of trajectories, phase maps, spectra and walk
paths.

All files are written atomically (temp file + rename, so partial files
are never left behind), with '\\n' newlines, a decimal point regardless of
locale, and floats at nine significant digits.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .economy import Trajectory
from .phases import PhaseLabel
from .sloppy import SpectrumReport, WalkPath
from .sweep import PhaseMap

FLOAT_DIGITS = 9


def fmt_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        x = float(v)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, f".{FLOAT_DIGITS}g")
    return str(v)


def atomic_write_text(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def write_csv(path: Path, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt_value(v) for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_json(path: Path, obj) -> None:
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------

def write_trajectory(path: Path, traj: Trajectory,
                     shock_windows: list[tuple[int, int]] | None = None,
                     ) -> None:
    """Trajectory CSV; with shock windows an extra 0/1 annotation column
    marks the steps inside any window."""
    header = list(Trajectory.COLUMNS)
    if shock_windows is not None:
        header.append("in_shock")

        def rows():
            for row in traj.rows():
                t = row[0]
                inside = any(lo <= t < hi for lo, hi in shock_windows)
                yield row + (1 if inside else 0,)
        write_csv(path, header, rows())
    else:
        write_csv(path, header, traj.rows())


def read_trajectory_csv(path: Path) -> Trajectory:
    """Read a trajectory CSV produced by write_trajectory."""
    with open(path, "r", encoding="utf-8", newline="") as f:
        lines = [ln.strip() for ln in f if ln.strip()]
    header = lines[0].split(",")
    expected = list(Trajectory.COLUMNS)
    if header[:len(expected)] != expected:
        raise ValueError(f"unexpected trajectory columns in {path}")
    data = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:]])
    if data.size == 0:
        data = data.reshape(0, len(header))
    return Trajectory(
        t=data[:, 0].astype(np.int64), u=data[:, 1], pi=data[:, 2],
        p_bar=data[:, 3], output=data[:, 4],
        bankruptcies=data[:, 5].astype(np.int64), S=data[:, 6],
        rho=data[:, 7], tau=data[:, 8],
        resid=np.zeros(data.shape[0]),
    )


def trajectory_status_json(traj: Trajectory) -> dict:
    return {
        "status": traj.status,
        "blowup_step": traj.blowup_step,
        "steps_recorded": len(traj),
    }


# ---------------------------------------------------------------------------
# phase maps
# ---------------------------------------------------------------------------

def write_phase_map(path: Path, pm: PhaseMap) -> None:
    write_csv(path, PhaseMap.COLUMNS, pm.rows())


# ---------------------------------------------------------------------------
# spectra and walks
# ---------------------------------------------------------------------------

def spectrum_to_dict(report: SpectrumReport, protocol_echo: dict | None = None,
                     ) -> dict:
    decades = report.decades
    return {
        "parameter_names": list(report.param_names),
        "eigenvalues": [float(v) for v in report.eigenvalues],
        "eigenvectors": [[float(x) for x in row]
                         for row in report.eigenvectors],
        "decades": None if not math.isfinite(decades) else float(decades),
        "trace_fractions": [float(v) for v in report.trace_fractions],
        "residual": float(report.residual),
        "protocol": protocol_echo or {},
    }


def write_spectrum(path: Path, report: SpectrumReport,
                   protocol_echo: dict | None = None) -> None:
    write_json(path, spectrum_to_dict(report, protocol_echo))


def write_walk(path: Path, walk: WalkPath) -> None:
    """Walk CSV: step, param_1..param_P, lambda_1, lambda_2, label,
    stop_reason (reason only on the final row)."""
    n_par = len(walk.param_names)
    header = (["step"] + [f"param_{j + 1}" for j in range(n_par)]
              + ["lambda_1", "lambda_2", "label", "stop_reason"])

    def rows():
        last = len(walk.points) - 1
        for k, pt in enumerate(walk.points):
            lam = pt.spectrum.eigenvalues
            lam2 = lam[1] if lam.shape[0] > 1 else 0.0
            yield ([k] + [pt.params[name] for name in walk.param_names]
                   + [lam[0], lam2, str(pt.label),
                      walk.stop_reason if k == last else ""])
    write_csv(path, header, rows())


def classification_to_dict(label: PhaseLabel, summary) -> dict:
    return {
        "label": str(label),
        "summary": {
            "u_mean": summary.u_mean, "u_max": summary.u_max,
            "u_min": summary.u_min, "u_std": summary.u_std,
            "amplitude": summary.amplitude, "pi_mean": summary.pi_mean,
            "pi_ema_end": None if not math.isfinite(summary.pi_ema_end)
            else summary.pi_ema_end,
            "bankruptcy_rate": summary.bankruptcy_rate,
            "crossings": summary.crossings,
            "blown_up": summary.blown_up,
            "shock_dwell": summary.shock_dwell,
            "window": list(summary.window),
        },
    }
