"""Trajectory container shared by all models, and its CSV/JSON serialization."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmptyTrajectory
from .ode import SolutionGrid, find_crossing

CSV_FLOAT = "%.17g"


@dataclass
class Trajectory:
    """Sampled time series of named observables.

    ``dense_columns`` maps a column to ``(component, scale)`` such that
    ``column == state[component] / scale``; crossings of those columns are
    resolved on the integrator's dense output instead of the samples.
    """

    times: np.ndarray
    columns: dict
    metadata: dict = field(default_factory=dict)
    solution: SolutionGrid | None = field(default=None, repr=False, compare=False)
    dense_columns: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.columns = {k: np.asarray(v, dtype=float) for k, v in self.columns.items()}
        for name, values in self.columns.items():
            if values.shape != self.times.shape:
                raise ValueError(f"column {name!r} has {values.size} samples, expected {self.times.size}")

    def __len__(self):
        return self.times.size

    def __getitem__(self, name):
        return self.columns[name]

    def crossing_time(self, name: str, threshold: float) -> float:
        """Earliest time at which column ``name`` reaches ``threshold``."""
        if self.times.size == 0:
            raise EmptyTrajectory("trajectory has no samples")
        if self.solution is not None and name in self.dense_columns:
            component, scale = self.dense_columns[name]
            return find_crossing(self.solution, component, threshold * scale)
        grid = SolutionGrid(self.times, self.columns[name][:, None], 0, 0,
                            float(self.times[0]), float(self.times[-1]))
        return find_crossing(grid, 0, threshold)

    def select(self, names):
        return Trajectory(self.times, {n: self.columns[n] for n in names}, dict(self.metadata))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def write_csv(traj: Trajectory, path, columns=None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(columns) if columns is not None else list(traj.columns)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["time", *names])
        data = [traj.times] + [traj.columns[n] for n in names]
        for row in zip(*data):
            writer.writerow([CSV_FLOAT % v for v in row])
    return path


def read_csv(path) -> Trajectory:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    arr = np.array([[float(v) for v in row] for row in body]).reshape(len(body), len(header))
    return Trajectory(arr[:, 0], {name: arr[:, i] for i, name in enumerate(header) if i > 0})


def write_metadata(metadata: dict, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(metadata), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def read_metadata(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))
