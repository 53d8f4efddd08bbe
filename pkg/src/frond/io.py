"""Reading and writing trajectories, matrices and manifests.

Trajectories use a long-form CSV with columns ``t, node, feature, value``
or a JSON document ``{"times", "states", "solver_meta"}``.  Floats are
written with 17 significant digits so files round-trip exactly.  Every
writer goes through :func:`atomic_write`, so a failed run never leaves a
partial file behind.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .fdesolve import Trajectory

TRAJECTORY_COLUMNS = ("t", "node", "feature", "value")


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def atomic_write(path, text: str) -> None:
    """Write ``text`` to a temporary file beside ``path`` and rename it into place."""
    atomic_write_many({path: text})


def atomic_write_many(files: dict) -> None:
    """Stage every ``{path: text}`` entry in a temporary file, then rename all.

    Nothing is renamed unless every temporary file was written.
    """
    staged = []
    try:
        for path, text in files.items():
            path = Path(path)
            fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
            staged.append((tmp, path))
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        for tmp, path in staged:
            os.replace(tmp, path)
    finally:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def dumps_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# --------------------------------------------------------------------------
# trajectories

def trajectory_rows(traj: Trajectory):
    for t, X in zip(traj.times, traj.states):
        ts = fmt(t)
        for i in range(X.shape[0]):
            for f in range(X.shape[1]):
                yield ts, i, f, fmt(X[i, f])


def trajectory_to_csv(traj: Trajectory) -> str:
    return csv_text(TRAJECTORY_COLUMNS, trajectory_rows(traj))


def trajectory_to_json(traj: Trajectory) -> str:
    return dumps_json({
        "times": [float(t) for t in traj.times],
        "states": np.asarray(traj.states, dtype=float).tolist(),
        "solver_meta": traj.solver_meta,
    })


def write_trajectory(traj: Trajectory, path, fmt_name: str = "csv") -> None:
    if fmt_name == "csv":
        atomic_write(path, trajectory_to_csv(traj))
    elif fmt_name == "json":
        atomic_write(path, trajectory_to_json(traj))
    else:
        raise ValueError(f"unknown output format {fmt_name!r}")


def read_trajectory(path) -> Trajectory:
    """Load a trajectory written by :func:`write_trajectory` (format from the suffix)."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json" or text.lstrip().startswith("{"):
        try:
            doc = json.loads(text)
            times = np.asarray(doc["times"], dtype=float)
            states = np.asarray(doc["states"], dtype=float)
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed trajectory JSON {path}: {exc}") from None
        if states.ndim != 3 or states.shape[0] != times.size:
            raise ValueError(f"trajectory JSON {path} has inconsistent shapes")
        return Trajectory(times, states, doc.get("solver_meta", {}))
    return _trajectory_from_csv(text, path)


def _trajectory_from_csv(text: str, path) -> Trajectory:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != TRAJECTORY_COLUMNS:
        raise ValueError(f"{path}: expected header {','.join(TRAJECTORY_COLUMNS)}")
    try:
        rows = [(float(t), int(i), int(f), float(v)) for t, i, f, v in reader]
    except ValueError as exc:
        raise ValueError(f"{path}: bad trajectory row: {exc}") from None
    if not rows:
        raise ValueError(f"{path}: empty trajectory")
    arr = np.array(rows)
    times, t_idx = np.unique(arr[:, 0], return_inverse=True)
    nodes = arr[:, 1].astype(int)
    feats = arr[:, 2].astype(int)
    N, d = nodes.max() + 1, feats.max() + 1
    if len(rows) != times.size * N * d:
        raise ValueError(f"{path}: trajectory is not a complete (t, node, feature) grid")
    states = np.full((times.size, N, d), np.nan)
    states[t_idx, nodes, feats] = arr[:, 3]
    if np.isnan(states).any():
        raise ValueError(f"{path}: trajectory has duplicate or missing entries")
    return Trajectory(times, states, {})


# --------------------------------------------------------------------------
# plain matrices (initial states, sources)

def read_matrix(path) -> np.ndarray:
    """Read a numeric CSV (or JSON list of lists) as an ``(N, d)`` matrix.

    A CSV header row of non-numeric labels is skipped.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json":
        try:
            M = np.asarray(json.loads(text), dtype=float)
        except (json.JSONDecodeError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed matrix JSON {path}: {exc}") from None
    else:
        rows = [r for r in csv.reader(io.StringIO(text)) if r]
        if rows:
            try:
                [float(x) for x in rows[0]]
            except ValueError:
                rows = rows[1:]
        try:
            M = np.array([[float(x) for x in r] for r in rows])
        except ValueError as exc:
            raise ValueError(f"{path}: non-numeric matrix entry: {exc}") from None
    if M.ndim == 1:
        M = M[:, None]
    if M.ndim != 2 or M.size == 0:
        raise ValueError(f"{path}: expected a non-empty 2-D matrix")
    return M


def read_vector(path) -> np.ndarray:
    M = read_matrix(path)
    if min(M.shape) != 1:
        raise ValueError(f"{path}: expected a vector")
    return M.ravel()
