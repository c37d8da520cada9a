"""Boson-to-boson collective decay: a condensate mode ``a`` converts into a
daughter mode ``b`` while emitting into a single leaky fermionic neutrino mode ``c``.

Units have hbar = 1. Three variants are available:

``full``
    mean-field equations for ``(n_a, n_b, n_c, S)`` with ``S = <a^dag b c>``,
    including the self-consistent detuning ``delta + u (n_a - n_b + 1)``.
``logistic``
    ``S`` adiabatically eliminated and ``n_c`` neglected, giving
    ``dn_b/dt = omega (1 + n_b) (N - n_b)``.
``interacting``
    the logistic law with the contact-interaction suppression factor
    ``1 / (1 + eta (1 - 2 n_b / N)^2)``, ``eta = (u N / gamma_cap)^2``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import brentq

from . import __version__
from .ode import IntegratorConfig, IvpProblem, integrate
from .trajectory import Trajectory

VARIANTS = ("full", "logistic", "interacting")

# layout of the full-variant state vector
N_A, N_B, N_C, S_RE, S_IM = range(5)


@dataclass(frozen=True)
class BBParams:
    """Parameters of the boson-to-boson model.

    ``g`` is the coupling magnitude and ``g_phase`` its phase. ``eps_a``,
    ``eps_b`` and ``e_nu`` only matter for the exact oracle; when all three are
    given they must reproduce ``delta``. ``u_a``, ``u_b``, ``u_ab`` override
    the equal contact coupling ``u`` in the oracle Hamiltonian only.
    """

    n_total: float
    g: float
    gamma_cap: float
    delta: float = 0.0
    g_phase: float = 0.0
    u: float = 0.0
    eps_a: float | None = None
    eps_b: float | None = None
    e_nu: float | None = None
    u_a: float | None = None
    u_b: float | None = None
    u_ab: float | None = None

    def __post_init__(self):
        if not self.n_total >= 1:
            raise ValueError("n_total must be >= 1")
        if not self.g >= 0:
            raise ValueError("g must be >= 0")
        if not self.gamma_cap > 0:
            raise ValueError("gamma_cap must be > 0")
        if not self.u >= 0:
            raise ValueError("u must be >= 0")
        energies = (self.eps_a, self.eps_b, self.e_nu)
        if all(e is not None for e in energies):
            implied = self.eps_a - self.eps_b - self.e_nu
            if not math.isclose(implied, self.delta, rel_tol=1e-12, abs_tol=1e-12):
                raise ValueError(f"delta={self.delta} inconsistent with eps_a - eps_b - e_nu = {implied}")

    @classmethod
    def with_eta(cls, eta: float, n_total: float, gamma_cap: float, **kwargs) -> "BBParams":
        """Build parameters whose contact coupling gives the requested ``eta``."""
        if eta < 0:
            raise ValueError("eta must be >= 0")
        return cls(n_total=n_total, gamma_cap=gamma_cap, u=gamma_cap * math.sqrt(eta) / n_total, **kwargs)

    @property
    def g_complex(self) -> complex:
        return cmath.rect(self.g, self.g_phase)

    @property
    def eta(self) -> float:
        return (self.u * self.n_total / self.gamma_cap) ** 2

    @property
    def omega(self) -> float:
        return bb_omega(self)


def bb_omega(params: BBParams) -> float:
    """Collective rate ``2 g^2 gamma_cap / (delta^2 + gamma_cap^2)``."""
    return 2.0 * params.g**2 * params.gamma_cap / (params.delta**2 + params.gamma_cap**2)


def _full_rhs_fn(params: BBParams):
    g = params.g_complex
    g_conj = g.conjugate()
    ig = 1j * g
    delta, u, gamma = params.delta, params.u, params.gamma_cap

    def rhs(state):
        n_a, n_b, n_c, s_re, s_im = state.tolist()
        s = complex(s_re, s_im)
        flow = 2.0 * (g_conj * s).imag
        delta_eff = delta + u * (n_a - n_b + 1.0)
        source = n_c * n_b * (1.0 + n_a) - (1.0 - n_c) * n_a * (1.0 + n_b)
        ds = complex(-gamma, delta_eff) * s + ig * source
        return np.array([flow, -flow, -flow - 2.0 * gamma * n_c, ds.real, ds.imag])

    return rhs


def bb_full_rhs(state, params: BBParams) -> np.ndarray:
    """Time derivative of ``(n_a, n_b, n_c, Re S, Im S)`` in the full variant."""
    return _full_rhs_fn(params)(np.asarray(state, dtype=float))


def bb_adiabatic_s(n_a: float, n_b: float, params: BBParams) -> complex:
    """Quasi-static correlator ``i g n_a (1 + n_b) / (i delta - gamma_cap)``."""
    return 1j * params.g_complex * n_a * (1.0 + n_b) / (1j * params.delta - params.gamma_cap)


def bb_logistic_rhs(n_b, params: BBParams):
    return params.omega * (1.0 + n_b) * (params.n_total - n_b)


def bb_interacting_rhs(n_b, params: BBParams):
    x = 1.0 - 2.0 * n_b / params.n_total
    return params.omega * (1.0 + n_b) * (params.n_total - n_b) / (1.0 + params.eta * x * x)


def bb_logistic_closed_form(t, n_total: float, omega: float):
    """Decayed fraction ``(e^x - 1) / (e^x + N)`` with ``x = omega (N + 1) t``.

    For ``x > 700`` the equivalent ``(1 - e^-x) / (1 + N e^-x)`` is used so the
    exponential never overflows.
    """
    x = omega * (n_total + 1.0) * np.asarray(t, dtype=float)
    with np.errstate(over="ignore"):
        big = x > 700.0
        e = np.exp(np.where(big, 0.0, x))
        em = np.exp(-np.where(big, x, 0.0))
        out = np.where(big, (1.0 - em) / (1.0 + n_total * em), (e - 1.0) / (e + n_total))
    return out if out.ndim else float(out)


def bb_logistic_crossing_time(fraction: float, n_total: float, omega: float) -> float:
    """Time at which the logistic decayed fraction equals ``fraction`` (0 <= fraction < 1)."""
    return math.log((1.0 + fraction * n_total) / (1.0 - fraction)) / (omega * (n_total + 1.0))


def bb_half_time(n_total: float, omega: float) -> float:
    return math.log(n_total + 2.0) / (omega * (n_total + 1.0))


def bb_inflection(params: BBParams, variant: str = "interacting") -> float:
    """Decayed fraction at which ``dn_b/dt`` peaks, i.e. where ``d^2 n_b/dt^2 = 0``.

    Solved as the root of the logarithmic derivative of the reduced rate law,
    which is unimodal on ``(0, N)``.
    """
    n = float(params.n_total)
    eta = params.eta if variant == "interacting" else 0.0
    if variant not in ("logistic", "interacting"):
        raise ValueError(f"inflection defined for reduced variants only, got {variant!r}")

    def dlog(nb):
        x = 1.0 - 2.0 * nb / n
        return 1.0 / (1.0 + nb) - 1.0 / (n - nb) + 4.0 * eta * x / (n * (1.0 + eta * x * x))

    if dlog(0.0) <= 0:
        return 0.0
    hi = n * (1.0 - 1e-15)
    nb = brentq(dlog, 0.0, hi, xtol=1e-14 * n, rtol=8.9e-16, maxiter=500)
    return nb / n


def peak_rate_fraction(traj: Trajectory) -> float:
    """Sampled decayed fraction at which the sampled emission rate is largest."""
    i = int(np.argmax(traj["rate"]))
    return float(traj["n_b_frac"][i])


def _reduced_rhs(params, variant):
    law = bb_logistic_rhs if variant == "logistic" else bb_interacting_rhs

    def rhs(t, y):
        return np.array([law(y[0], params)])

    return rhs


def bb_simulate(params: BBParams, variant: str, sample_times, config: IntegratorConfig | None = None) -> Trajectory:
    """Integrate one variant from ``n_a = N``, ``n_b = n_c = 0``, ``S = 0``."""
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
    config = config or IntegratorConfig()
    ts = np.asarray(sample_times, dtype=float)
    n = float(params.n_total)
    if variant == "full":
        full = _full_rhs_fn(params)
        problem = IvpProblem(lambda t, y: full(y), 0.0, [n, 0.0, 0.0, 0.0, 0.0], ts[-1])
    else:
        problem = IvpProblem(_reduced_rhs(params, variant), 0.0, [0.0], ts[-1])
    grid = integrate(problem, config, ts)
    y = grid.states

    if variant == "full":
        rates = np.array([full(row)[N_B] for row in y])
        columns = {
            "n_a": y[:, N_A], "n_b": y[:, N_B], "n_c": y[:, N_C],
            "s_re": y[:, S_RE], "s_im": y[:, S_IM],
            "n_b_frac": y[:, N_B] / n, "rate": rates,
        }
        drift = float(np.max(np.abs(y[:, N_A] + y[:, N_B] - n)))
        dense = {"n_b": (N_B, 1.0), "n_b_frac": (N_B, n), "n_a": (N_A, 1.0)}
    else:
        law = bb_logistic_rhs if variant == "logistic" else bb_interacting_rhs
        columns = {"n_b": y[:, 0], "n_b_frac": y[:, 0] / n, "rate": law(y[:, 0], params)}
        drift = 0.0
        dense = {"n_b": (0, 1.0), "n_b_frac": (0, n)}

    metadata = {
        "model": f"bb_{variant}",
        "params": asdict(params),
        "omega": params.omega,
        "eta": params.eta,
        "integrator": config.to_dict(),
        "accepted_steps": grid.accepted_steps,
        "rejected_steps": grid.rejected_steps,
        "conservation_drift": drift,
        "tool_version": __version__,
    }
    return Trajectory(ts, columns, metadata, solution=grid, dense_columns=dense)
