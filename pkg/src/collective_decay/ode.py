"""Explicit Runge-Kutta integration of real-vector initial-value problems.

Two methods are provided:

* ``adaptive_embedded_rk``: the Dormand-Prince 5(4) pair with FSAL, a PI step
  controller and its fourth-order continuous extension for dense output.
* ``fixed_rk4``: the classical four-stage scheme. Steps are aligned so that
  every requested sample time is a step endpoint; cubic Hermite segments
  give dense output in between.

Errors are measured in the max norm, component ``i`` being scaled by
``abs_tol + rel_tol * max(|y_old[i]|, |y_new[i]|)``.
"""

from __future__ import annotations

import bisect as _bisect
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import bisect

from .errors import MaxStepsExceeded, NoCrossing, NonFiniteState, StepUnderflow

ADAPTIVE = "adaptive_embedded_rk"
FIXED_RK4 = "fixed_rk4"
METHODS = (ADAPTIVE, FIXED_RK4)

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
# fifth-order minus embedded fourth-order weights, FSAL stage included
_E = np.array([-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
# continuous extension: y(t + s h) = y + h * (K.T @ _P) @ [s, s^2, s^3, s^4]
_P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

_SAFETY = 0.9
_FAC_MIN = 0.2
_FAC_MAX = 10.0
_BETA = 0.04
_EXPO = 0.2 - 0.75 * _BETA


@dataclass(frozen=True)
class IntegratorConfig:
    """Integrator settings.

    Step sizes left as ``None`` are resolved against the integration span:
    ``max_step`` defaults to the span, ``min_step`` to ``1e-14 * span`` and the
    adaptive ``initial_step`` is chosen from the problem's local scales. For
    ``fixed_rk4`` the ``initial_step`` is the step size (default ``span / 1000``).
    """

    method: str = ADAPTIVE
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    initial_step: float | None = None
    max_step: float | None = None
    min_step: float | None = None
    max_steps: int = 1_000_000

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be positive")
        if self.max_steps <= 0:
            raise ValueError("max_steps must be positive")
        for name in ("initial_step", "max_step", "min_step"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ValueError(f"{name} must be positive")
        lo = self.min_step if self.min_step is not None else 0.0
        hi = self.max_step if self.max_step is not None else math.inf
        if self.initial_step is not None and not lo <= self.initial_step <= hi:
            raise ValueError("require min_step <= initial_step <= max_step")
        if not lo <= hi:
            raise ValueError("require min_step <= max_step")

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class IvpProblem:
    rhs: Callable[[float, np.ndarray], np.ndarray]
    t0: float
    y0: np.ndarray
    t_end: float

    def __post_init__(self):
        y0 = np.array(self.y0, dtype=float).reshape(-1)
        object.__setattr__(self, "y0", y0)
        if not self.t_end > self.t0:
            raise ValueError("t_end must exceed t0")

    @property
    def dimension(self) -> int:
        return self.y0.size


class _DPSegment:
    __slots__ = ("t", "h", "y", "k", "_q")

    def __init__(self, t, h, y, k):
        self.t, self.h, self.y, self.k = t, h, y, k
        self._q = None

    def __call__(self, t):
        if self._q is None:
            self._q = self.k.T @ _P
        s = (t - self.t) / self.h
        return self.y + self.h * (self._q @ np.array([s, s * s, s**3, s**4]))


class _HermiteSegment:
    __slots__ = ("t", "h", "y0", "y1", "f0", "f1")

    def __init__(self, t, h, y0, y1, f0, f1):
        self.t, self.h = t, h
        self.y0, self.y1, self.f0, self.f1 = y0, y1, f0, f1

    def __call__(self, t):
        s = (t - self.t) / self.h
        h00 = (1 + 2 * s) * (1 - s) ** 2
        h10 = s * (1 - s) ** 2
        h01 = s * s * (3 - 2 * s)
        h11 = s * s * (s - 1)
        return h00 * self.y0 + h10 * self.h * self.f0 + h01 * self.y1 + h11 * self.h * self.f1


@dataclass
class SolutionGrid:
    """States sampled at ``times``; ``evaluate`` reaches any time in between."""

    times: np.ndarray
    states: np.ndarray
    accepted_steps: int
    rejected_steps: int
    t0: float
    t_end: float
    segments: list = field(default_factory=list, repr=False)
    _starts: list = field(default_factory=list, repr=False, compare=False)

    @property
    def has_dense(self) -> bool:
        return bool(self.segments)

    def evaluate(self, t: float) -> np.ndarray:
        if not self.segments:
            raise ValueError("solution was integrated without dense output")
        if not self.t0 <= t <= self.t_end:
            raise ValueError(f"t={t} outside [{self.t0}, {self.t_end}]")
        if len(self._starts) != len(self.segments):
            self._starts = [seg.t for seg in self.segments]
        i = max(_bisect.bisect_right(self._starts, t) - 1, 0)
        return self.segments[i](t)


def _check_samples(problem: IvpProblem, sample_times) -> np.ndarray:
    if sample_times is None:
        return np.array([problem.t0, problem.t_end])
    ts = np.asarray(sample_times, dtype=float).reshape(-1)
    if ts.size == 0:
        raise ValueError("sample_times is empty")
    if np.any(np.diff(ts) <= 0):
        raise ValueError("sample_times must be strictly increasing")
    if ts[0] < problem.t0 or ts[-1] > problem.t_end:
        raise ValueError("sample_times must lie within [t0, t_end]")
    return ts


def _finite_or_raise(t, y, f):
    # a sum is non-finite iff some term is (barring overflow near 1e308)
    if not math.isfinite(y.sum() + f.sum()):
        raise NonFiniteState(f"non-finite state at t={t!r}")


def _initial_step(rhs, t0, y0, f0, config, direction_span):
    scale = config.abs_tol + config.rel_tol * np.abs(y0)
    d0 = np.max(np.abs(y0) / scale)
    d1 = np.max(np.abs(f0) / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, direction_span)
    y1 = y0 + h0 * f0
    f1 = rhs(t0 + h0, y1)
    d2 = np.max(np.abs(f1 - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1)


def integrate(problem: IvpProblem, config: IntegratorConfig | None = None,
              sample_times: Sequence[float] | None = None, keep_dense: bool = True) -> SolutionGrid:
    """Integrate ``problem`` and sample the solution at ``sample_times``.

    Raises
    ------
    StepUnderflow
        If the adaptive controller asks for a step below ``min_step``.
    MaxStepsExceeded
        If more than ``max_steps`` step attempts are needed.
    NonFiniteState
        If a stage or a new state has a non-finite component.
    """
    config = config or IntegratorConfig()
    ts = _check_samples(problem, sample_times)
    if config.method == FIXED_RK4:
        return _integrate_rk4(problem, config, ts, keep_dense)
    return _integrate_dp(problem, config, ts, keep_dense)


def _integrate_dp(problem, config, ts, keep_dense):
    rhs = problem.rhs
    t0, t_end = float(problem.t0), float(problem.t_end)
    span = t_end - t0
    h_max = config.max_step if config.max_step is not None else span
    h_min = config.min_step if config.min_step is not None else 1e-14 * span
    rtol, atol = config.rel_tol, config.abs_tol

    y = problem.y0.copy()
    f = np.asarray(rhs(t0, y), dtype=float)
    _finite_or_raise(t0, y, f)
    dim = y.size
    out = np.empty((ts.size, dim))
    idx = 0
    while idx < ts.size and ts[idx] == t0:
        out[idx] = y
        idx += 1

    if config.initial_step is not None:
        h = config.initial_step
    else:
        h = _initial_step(rhs, t0, y, f, config, span)
    h = min(max(h, h_min), h_max)

    K = np.empty((7, dim))
    segments = []
    t = t0
    accepted = rejected = 0
    err_prev = 1e-4
    just_rejected = False
    while t < t_end:
        if accepted + rejected >= config.max_steps:
            raise MaxStepsExceeded(f"more than {config.max_steps} steps before t={t_end}")
        last = t + h >= t_end
        if last:
            h = t_end - t
        K[0] = f
        for s in range(1, 6):
            K[s] = rhs(t + _C[s] * h, y + h * (_A[s] @ K[:s]))
        y_new = y + h * (_B @ K[:6])
        t_new = t_end if last else t + h
        f_new = np.asarray(rhs(t_new, y_new), dtype=float)
        _finite_or_raise(t_new, y_new, f_new)
        K[6] = f_new

        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.max(np.abs(h * (_E @ K)) / scale))

        if err <= 1.0:
            accepted += 1
            seg = None
            if keep_dense or (idx < ts.size and ts[idx] < t_new):
                seg = _DPSegment(t, h, y, K.copy())
                if keep_dense:
                    segments.append(seg)
            while idx < ts.size and ts[idx] <= t_new:
                out[idx] = y_new if ts[idx] == t_new else seg(ts[idx])
                idx += 1
            fac = (err ** _EXPO / err_prev ** _BETA) if err > 0 else 0.0
            fac = _FAC_MAX if fac == 0 else min(_FAC_MAX, max(_FAC_MIN, _SAFETY / fac))
            h_new = h * fac
            if just_rejected:
                h_new = min(h_new, h)
            err_prev = max(err, 1e-4)
            just_rejected = False
            t, y, f = t_new, y_new, f_new
        else:
            rejected += 1
            just_rejected = True
            h_new = h * max(_FAC_MIN, _SAFETY * err ** -0.2)
        if t < t_end and h_new < h_min:
            raise StepUnderflow(f"step {h_new:.3e} below min_step {h_min:.3e} at t={t!r}")
        h = min(h_new, h_max)

    return SolutionGrid(ts, out, accepted, rejected, t0, t_end, segments)


def _integrate_rk4(problem, config, ts, keep_dense):
    rhs = problem.rhs
    t0, t_end = float(problem.t0), float(problem.t_end)
    span = t_end - t0
    h_nominal = config.initial_step if config.initial_step is not None else span / 1000
    if config.max_step is not None:
        h_nominal = min(h_nominal, config.max_step)

    breaks = np.unique(np.concatenate([[t0], ts, [t_end]]))
    y = problem.y0.copy()
    f = np.asarray(rhs(t0, y), dtype=float)
    _finite_or_raise(t0, y, f)
    out = np.empty((ts.size, y.size))
    idx = 0
    if ts[0] == t0:
        out[0] = y
        idx = 1

    segments = []
    steps = 0
    t = t0
    for a, b in zip(breaks[:-1], breaks[1:]):
        n = max(1, math.ceil((b - a) / h_nominal - 1e-9))
        h = (b - a) / n
        for j in range(n):
            if steps >= config.max_steps:
                raise MaxStepsExceeded(f"more than {config.max_steps} steps before t={t_end}")
            t_new = b if j == n - 1 else a + (j + 1) * h
            k1 = f
            k2 = rhs(t + h / 2, y + (h / 2) * k1)
            k3 = rhs(t + h / 2, y + (h / 2) * k2)
            k4 = rhs(t_new, y + h * k3)
            y_new = y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
            f_new = np.asarray(rhs(t_new, y_new), dtype=float)
            _finite_or_raise(t_new, y_new, f_new)
            if keep_dense:
                segments.append(_HermiteSegment(t, t_new - t, y, y_new, f, f_new))
            t, y, f = t_new, y_new, f_new
            steps += 1
        if idx < ts.size and ts[idx] == b:
            out[idx] = y
            idx += 1
    return SolutionGrid(ts, out, steps, 0, t0, t_end, segments)


def find_crossing(grid: SolutionGrid, component: int, threshold: float) -> float:
    """Earliest time at which ``component`` reaches ``threshold``.

    The first sample interval bracketing the threshold is refined by bisection,
    on the dense solution when the grid carries one and on a monotone cubic
    (PCHIP) interpolant of the samples otherwise.
    """
    values = np.asarray(grid.states)[:, component]
    times = np.asarray(grid.times)
    tol = 1e-6 * (grid.t_end - grid.t0)
    for i in range(values.size):
        if values[i] == threshold:
            return float(times[i])
        if i + 1 < values.size and (values[i] - threshold) * (values[i + 1] - threshold) < 0:
            break
    else:
        raise NoCrossing(f"component {component} never reaches {threshold!r}")

    a, b = float(times[i]), float(times[i + 1])
    if grid.has_dense:
        def g(t):
            return grid.evaluate(t)[component] - threshold
    else:
        pchip = PchipInterpolator(times, values)

        def g(t):
            return float(pchip(t)) - threshold
    ga, gb = g(a), g(b)
    if ga == 0:
        return a
    if gb == 0:
        return b
    if ga * gb > 0:
        # dense segment disagrees with the samples only at round-off level
        return a if abs(ga) < abs(gb) else b
    return float(bisect(g, a, b, xtol=tol, rtol=4 * np.finfo(float).eps))
