"""Fermion-pair condensate decaying into a bosonic condensate.

A molecular mode ``a`` (tightly bound fermion pairs) is destroyed by the jump
``sqrt(gamma) (b^dag)^2 a``, feeding two quanta into the bosonic mode ``b``.
``N`` counts fermionic atoms, so ``2 n_a + n_b = N`` and the run starts from
``n_a = N / 2``. After factorizing ``<n_a (n_b+1)(n_b+2)>`` the dephasing
channels drop out of the closed equations.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__
from .errors import ThresholdNotReached
from .ode import IntegratorConfig, IvpProblem, integrate
from .trajectory import Trajectory

FORMS = ("pair", "reduced")
# the explosion amplifies local errors; at 1e-9 the two forms drift apart by ~1e-9
DEFAULT_CONFIG = IntegratorConfig(rel_tol=1e-11, abs_tol=1e-12)


@dataclass(frozen=True)
class FBParams:
    n_total: int
    gamma_decay: float
    gamma_phi_a: float = 0.0
    gamma_phi_b: float = 0.0
    e_a: float = 0.0
    e_b: float = 0.0

    def __post_init__(self):
        n = self.n_total
        if isinstance(n, float):
            if not n.is_integer():
                raise ValueError("n_total must be an integer")
            object.__setattr__(self, "n_total", int(n))
        if self.n_total < 2 or self.n_total % 2:
            raise ValueError("n_total counts paired fermions and must be even and >= 2")
        for name in ("gamma_decay", "gamma_phi_a", "gamma_phi_b"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0")


def fb_rhs(state, params: FBParams) -> np.ndarray:
    """Factorized ``(dn_a/dt, dn_b/dt)``; dephasing rates do not appear."""
    n_a, n_b = state[0], state[1]
    rate = params.gamma_decay * n_a * (n_b + 1.0) * (n_b + 2.0)
    return np.array([-rate, 2.0 * rate])


def fb_reduced_rhs(n_b, params: FBParams):
    return params.gamma_decay * (params.n_total - n_b) * (n_b + 1.0) * (n_b + 2.0)


def fb_onset_time(params: FBParams) -> float:
    """``ln 2 / (gamma N)``: blow-up time of the early-stage law ``gamma N (n+1)(n+2)``.

    A convenient time scale for choosing integration windows; the actual
    half-decay time is somewhat later.
    """
    return math.log(2.0) / (params.gamma_decay * params.n_total)


def fb_simulate(params: FBParams, sample_times, form: str = "pair",
                config: IntegratorConfig | None = None) -> Trajectory:
    """Integrate from ``n_a = N/2``, ``n_b = 0`` in the pair or the reduced form."""
    if form not in FORMS:
        raise ValueError(f"form must be one of {FORMS}, got {form!r}")
    config = config or DEFAULT_CONFIG
    ts = np.asarray(sample_times, dtype=float)
    n = float(params.n_total)
    if form == "pair":
        problem = IvpProblem(lambda t, y: fb_rhs(y, params), 0.0, [n / 2, 0.0], ts[-1])
    else:
        problem = IvpProblem(lambda t, y: np.array([fb_reduced_rhs(y[0], params)]), 0.0, [0.0], ts[-1])
    grid = integrate(problem, config, ts)
    y = grid.states
    if form == "pair":
        n_a, n_b = y[:, 0], y[:, 1]
        drift = float(np.max(np.abs(2.0 * n_a + n_b - n)))
        dense = {"n_b": (1, 1.0), "n_b_frac": (1, n)}
    else:
        n_b = y[:, 0]
        n_a = (n - n_b) / 2.0
        drift = 0.0
        dense = {"n_b": (0, 1.0), "n_b_frac": (0, n)}
    columns = {
        "n_a": n_a,
        "n_b": n_b,
        "n_b_frac": n_b / n,
        "t_gamma_n2": ts * params.gamma_decay * n * n,
    }
    metadata = {
        "model": "fb",
        "form": form,
        "params": asdict(params),
        "integrator": config.to_dict(),
        "accepted_steps": grid.accepted_steps,
        "rejected_steps": grid.rejected_steps,
        "conservation_drift": drift,
        "tool_version": __version__,
    }
    return Trajectory(ts, columns, metadata, solution=grid, dense_columns=dense)


def half_time(traj: Trajectory, column: str = "n_b_frac") -> float:
    return traj.crossing_time(column, 0.5)


def fb_sharpness(traj: Trajectory, column: str = "n_b_frac") -> float:
    """Transition width over onset time, ``(t_90 - t_10) / t_50``.

    Works on any trajectory carrying a decayed-fraction column, so logistic
    runs can be compared on the same footing.
    """
    values = np.asarray(traj[column])
    if values.size == 0 or np.max(values) < 0.99:
        raise ThresholdNotReached(f"{column} must reach 0.99, peaked at {values.max() if values.size else 'n/a'}")
    t10 = traj.crossing_time(column, 0.1)
    t50 = traj.crossing_time(column, 0.5)
    t90 = traj.crossing_time(column, 0.9)
    return (t90 - t10) / t50
