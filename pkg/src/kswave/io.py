"""CSV and ``key=value`` sidecar files.  Every float is written with 17 significant digits."""

from __future__ import annotations

from pathlib import Path

import numpy as np

__all__ = [
    "fmt",
    "write_columns",
    "read_columns",
    "write_meta",
    "read_meta",
    "write_trace",
    "write_snapshot",
    "snapshot_name",
    "write_profile",
    "read_profile_csv",
]

PROFILE_HEADER = ("z", "U", "P", "Pprime")


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def write_columns(path, header, columns) -> Path:
    path = Path(path)
    data = np.column_stack([np.asarray(c, float) for c in columns])
    np.savetxt(path, data, delimiter=",", header=",".join(header), comments="", fmt="%.17g")
    return path


def read_columns(path, expect_header=None) -> tuple[list[str], np.ndarray]:
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip().split(",")
    if expect_header is not None and tuple(header[:len(expect_header)]) != tuple(expect_header):
        raise ValueError(f"{path}: header {header} does not start with {list(expect_header)}")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, data


def write_meta(path, items: dict) -> Path:
    path = Path(path)
    path.write_text("".join(f"{k}={fmt(v)}\n" for k, v in items.items()))
    return path


def read_meta(path) -> dict:
    out = {}
    for line in Path(path).read_text().splitlines():
        if line.strip() and not line.lstrip().startswith("#"):
            k, _, v = line.partition("=")
            out[k.strip()] = v.strip()
    return out


def write_trace(path, trace) -> Path:
    header = ["t", "mass", "separatrix", "jump"] + [f"xi_{b:.4f}" for b in trace.levels]
    cols = [trace.times, trace.mass, trace.separatrix, trace.jump] + list(trace.xi.T)
    return write_columns(path, header, cols)


def snapshot_name(prefix: str, t: float) -> str:
    return f"{prefix}{t:g}.csv"


def write_snapshot(directory, prefix: str, t: float, u, p) -> Path:
    return write_columns(Path(directory) / snapshot_name(prefix, t), ("x", "u", "p"),
                         (u.grid.centers, u.values, p.values))


def write_profile(path, profile, extra: dict | None = None) -> tuple[Path, Path]:
    """Profile CSV plus a ``.meta`` sidecar with the same basename."""
    path = Path(path)
    write_columns(path, PROFILE_HEADER, (profile.z, profile.U, profile.P, profile.Pprime))
    meta = {
        "c": profile.c,
        "U0minus": profile.U0minus,
        "iterations": profile.iterations,
        "residual_eta": profile.residual_eta,
        "chi_hat": profile.chi_hat,
    }
    meta.update(extra or {})
    return path, write_meta(path.with_suffix(".meta"), meta)


def read_profile_csv(path):
    """Returns ``(z, U, P, Pprime)`` from a profile CSV."""
    _, d = read_columns(path, PROFILE_HEADER)
    return d[:, 0], d[:, 1], d[:, 2], d[:, 3]
