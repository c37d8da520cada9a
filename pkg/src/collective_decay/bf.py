"""Boson-to-fermion decay into a ladder of fermionic levels.

A condensate mode ``a`` decays into level ``alpha`` of a fermionic band
(Pauli blocked by that level's occupation and by the neutrino mode ``c``),
decayed atoms relax one level down at rate ``gamma_th`` when the lower level
has room, and the neutrino leaks out at ``gamma_cap``. Correlations are
factorized: ``<n_i n_j> ~ <n_i><n_j>``.

State layout: ``[n_a, n_0, ..., n_M, n_c]``; ``n_c`` is dropped when the
neutrino is taken to escape instantly (``fast_neutrino``).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__
from .errors import BoundViolation, EmptyTrajectory
from .ode import IntegratorConfig, IvpProblem, integrate
from .trajectory import Trajectory

BOUND_SLACK = 1e-6


@dataclass(frozen=True)
class BFParams:
    """Boson-to-fermion parameters.

    ``n_levels`` defaults to ``alpha + 1``: decay feeds only level ``alpha``
    and relaxation only goes down, so higher levels never fill.
    ``gamma_profile[k]`` (``k >= 1``) overrides the relaxation rate out of level
    ``k``. The energies never enter the factorized dynamics; they are kept for
    the exact oracle.
    """

    n_total: float
    alpha: int
    g_alpha: float
    gamma_th: float
    gamma_cap: float = 1.0
    n_levels: int | None = None
    e_a: float = 0.0
    e_levels: tuple | None = None
    e_nu: float = 0.0
    gamma_profile: tuple | None = None

    def __post_init__(self):
        if self.n_levels is None:
            object.__setattr__(self, "n_levels", int(self.alpha) + 1)
        if not self.n_total >= 1:
            raise ValueError("n_total must be >= 1")
        if not 0 <= self.alpha <= self.n_levels - 1:
            raise ValueError("alpha must index one of the n_levels levels")
        for name in ("g_alpha", "gamma_th", "gamma_cap"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0")
        if self.e_levels is not None:
            levels = tuple(float(e) for e in self.e_levels)
            object.__setattr__(self, "e_levels", levels)
            if len(levels) != self.n_levels:
                raise ValueError("e_levels must have one entry per level")
            if any(b < a for a, b in zip(levels, levels[1:])):
                raise ValueError("e_levels must be ascending")
        if self.gamma_profile is not None:
            profile = tuple(float(g) for g in self.gamma_profile)
            object.__setattr__(self, "gamma_profile", profile)
            if len(profile) != self.n_levels or any(g < 0 for g in profile):
                raise ValueError("gamma_profile needs n_levels non-negative entries")

    def relaxation_rates(self) -> np.ndarray:
        """Rate out of level ``k`` into ``k - 1``; entry 0 is unused."""
        if self.gamma_profile is not None:
            rates = np.array(self.gamma_profile, dtype=float)
        else:
            rates = np.full(self.n_levels, float(self.gamma_th))
        rates[0] = 0.0
        return rates

    def level_energies(self) -> np.ndarray:
        if self.e_levels is not None:
            return np.array(self.e_levels)
        return np.arange(self.n_levels, dtype=float)


def _rhs_fn(params: BFParams, fast_neutrino: bool):
    alpha = int(params.alpha)
    m = int(params.n_levels)
    g = float(params.g_alpha)
    gamma_cap = float(params.gamma_cap)
    relax = params.relaxation_rates()[1:]

    def rhs(state):
        n_a = state[0]
        n = state[1:1 + m]
        n_c = 0.0 if fast_neutrino else state[1 + m]
        p = g * n_a * (1.0 - n[alpha]) * (1.0 - n_c)
        flow = relax * n[1:] * (1.0 - n[:-1])
        out = np.empty_like(state)
        out[0] = -p
        dn = out[1:1 + m]
        dn[:] = 0.0
        dn[1:] -= flow
        dn[:-1] += flow
        dn[alpha] += p
        if not fast_neutrino:
            out[1 + m] = p - gamma_cap * n_c
        return out

    return rhs


def bf_rhs(state, params: BFParams, fast_neutrino: bool = False) -> np.ndarray:
    """Factorized time derivative of ``[n_a, n_0..n_M, (n_c)]``."""
    return _rhs_fn(params, fast_neutrino)(np.asarray(state, dtype=float))


def bf_initial_state(params: BFParams, fast_neutrino: bool = False) -> np.ndarray:
    y0 = np.zeros(1 + params.n_levels + (0 if fast_neutrino else 1))
    y0[0] = params.n_total
    return y0


def bf_exponential_bound(t, g_alpha: float):
    """Decayed fraction ``1 - exp(-g_alpha t)`` of unimpeded single-atom decay."""
    return -np.expm1(-g_alpha * np.asarray(t, dtype=float))


def bf_stationary_residual(params: BFParams) -> float:
    """Undecayed atoms left once levels ``0..alpha`` are filled."""
    return max(float(params.n_total) - (int(params.alpha) + 1), 0.0)


def _check_bounds(y, m, fast_neutrino):
    occ = y[:, 1:1 + m] if fast_neutrino else np.column_stack([y[:, 1:1 + m], y[:, 1 + m]])
    if np.any(occ > 1.0 + BOUND_SLACK) or np.any(occ < -BOUND_SLACK) or np.any(y[:, 0] < -BOUND_SLACK):
        raise BoundViolation("fermionic occupation left [0, 1]; tighten integrator tolerances")


def bf_simulate(params: BFParams, sample_times, fast_neutrino: bool = False,
                config: IntegratorConfig | None = None) -> Trajectory:
    """Integrate from ``n_a = N`` with an empty ladder and no neutrino.

    Columns: ``n_a``, ``decayed_frac`` (sum of ladder occupations over N),
    ``n_c`` (identically zero with ``fast_neutrino``), ``decay_rate``
    (``-dn_a/dt``) and the ladder profile ``n_k_0 .. n_k_M``.
    """
    config = config or IntegratorConfig()
    ts = np.asarray(sample_times, dtype=float)
    m = int(params.n_levels)
    rhs = _rhs_fn(params, fast_neutrino)
    problem = IvpProblem(lambda t, y: rhs(y), 0.0, bf_initial_state(params, fast_neutrino), ts[-1])
    grid = integrate(problem, config, ts)
    y = grid.states
    _check_bounds(y, m, fast_neutrino)

    n = float(params.n_total)
    ladder = y[:, 1:1 + m]
    decayed = ladder.sum(axis=1)
    columns = {
        "n_a": y[:, 0],
        "decayed_frac": decayed / n,
        "n_c": np.zeros_like(ts) if fast_neutrino else y[:, 1 + m],
        "decay_rate": np.array([-rhs(row)[0] for row in y]),
    }
    for k in range(m):
        columns[f"n_k_{k}"] = ladder[:, k]
    metadata = {
        "model": "bf",
        "params": asdict(params),
        "fast_neutrino": fast_neutrino,
        "time_unit": "1/gamma_th",
        "integrator": config.to_dict(),
        "accepted_steps": grid.accepted_steps,
        "rejected_steps": grid.rejected_steps,
        "conservation_drift": float(np.max(np.abs(y[:, 0] + decayed - n))),
        "tool_version": __version__,
    }
    return Trajectory(ts, columns, metadata, solution=grid, dense_columns={"n_a": (0, 1.0)})


def bf_plateau_metric(traj: Trajectory) -> float:
    """Depth of the deepest valley in the log-time decay rate.

    With ``r(t) = t * decay_rate(t)`` (the rate per unit ``ln t``), each sample
    in the middle third of the log-time window gets the dip
    ``1 - r / min(max r before, max r after)``; the metric is the largest dip.
    A single-humped rate, as for exponential decay, scores 0; a Pauli-blocking
    plateau between an early burst and the late relaxation-limited decay
    scores close to 1.
    """
    t = np.asarray(traj.times)
    keep = t > 0
    if np.count_nonzero(keep) < 3:
        raise EmptyTrajectory("plateau metric needs at least three samples at t > 0")
    t = t[keep]
    r = t * np.asarray(traj["decay_rate"])[keep]
    left = np.maximum.accumulate(r)
    right = np.maximum.accumulate(r[::-1])[::-1]
    envelope = np.minimum(left, right)
    log_t = np.log(t)
    lo, hi = log_t[0], log_t[-1]
    window = (log_t >= lo + (hi - lo) / 3) & (log_t <= lo + 2 * (hi - lo) / 3)
    with np.errstate(divide="ignore", invalid="ignore"):
        dip = np.where(envelope > 0, 1.0 - r / envelope, 0.0)
    if not np.any(window):
        return 0.0
    return float(max(dip[window].max(), 0.0))


def log_time_grid(t_min: float, t_end: float, n_samples: int, include_zero: bool = True) -> np.ndarray:
    """Logarithmically spaced samples on ``[t_min, t_end]``, optionally prefixed by 0."""
    grid = np.logspace(math.log10(t_min), math.log10(t_end), n_samples - (1 if include_zero else 0))
    grid[-1] = t_end
    return np.concatenate([[0.0], grid]) if include_zero else grid
