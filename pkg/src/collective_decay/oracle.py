"""Exact Lindblad dynamics on small truncated Fock spaces.

The mean-field models close their equations by factorizing correlators. The
pre-factorization equations of motion are exact operator statements, and
this module checks them directly: for any density matrix ``rho`` and
observable ``O``, ``tr(O L[rho])`` must equal the expectation of the claimed
right-hand side. It also propagates density matrices for small ``N`` so the
mean-field trajectories can be benchmarked.

Bosonic modes are truncated at ``local_dim - 1`` quanta. Canonical relations
then hold on every state whose conserved atom number does not exceed the
truncation, so random test states are drawn from that physical sector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np
import scipy.sparse as sp

from .bb import BBParams, bb_simulate
from .bf import BFParams
from .errors import CapExceeded, DimensionMismatch, NonPhysicalState, TruncationTooSmall, UnknownMode
from .fb import FBParams

BOSE = "bose"
FERMI = "fermi"
DEFAULT_CAP = 4096
# largest space for which the d^2 x d^2 RK4 propagator is formed (~70 MB)
DENSE_PROPAGATOR_DIM = 48
KINDS = ("destroy", "create", "number")


@dataclass(frozen=True)
class Mode:
    label: str
    statistics: str
    local_dim: int

    def __post_init__(self):
        if self.statistics not in (BOSE, FERMI):
            raise ValueError(f"statistics must be {BOSE!r} or {FERMI!r}")
        if self.statistics == FERMI and self.local_dim != 2:
            raise ValueError("fermionic modes have local_dim 2")
        if self.local_dim < 1:
            raise ValueError("local_dim must be >= 1")


class FockSpace:
    """Tensor product of truncated modes, first mode most significant in the basis index."""

    def __init__(self, modes, cap: int = DEFAULT_CAP):
        self.modes = tuple(m if isinstance(m, Mode) else Mode(*m) for m in modes)
        labels = [m.label for m in self.modes]
        if len(set(labels)) != len(labels):
            raise ValueError("mode labels must be unique")
        self.total_dim = reduce(lambda a, b: a * b, (m.local_dim for m in self.modes), 1)
        self.cap = cap
        if self.total_dim > cap:
            raise CapExceeded(f"dimension {self.total_dim} exceeds cap {cap}")
        self._index = {label: i for i, label in enumerate(labels)}
        self._ops = {}

    def __repr__(self):
        inner = ", ".join(f"{m.label}:{m.statistics}[{m.local_dim}]" for m in self.modes)
        return f"FockSpace({inner})"

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise UnknownMode(f"no mode {label!r} in {self!r}") from None

    def occupations(self) -> np.ndarray:
        """Occupation of every mode in every basis state, shape ``(total_dim, n_modes)``."""
        dims = [m.local_dim for m in self.modes]
        grids = np.meshgrid(*[np.arange(d) for d in dims], indexing="ij")
        return np.stack([g.reshape(-1) for g in grids], axis=1)

    def op(self, label: str, kind: str):
        key = (label, kind)
        if key not in self._ops:
            self._ops[key] = build_mode_op(self, label, kind)
        return self._ops[key]

    def identity(self):
        return sp.identity(self.total_dim, dtype=complex, format="csr")


def _local_destroy(dim):
    return sp.diags(np.sqrt(np.arange(1, dim, dtype=float)), 1, shape=(dim, dim), dtype=complex)


def build_mode_op(space: FockSpace, mode: str, kind: str):
    """Sparse matrix of ``destroy``, ``create`` or ``number`` for one mode.

    Fermionic operators carry a parity string over all preceding fermionic
    modes, so canonical anticommutation holds exactly.
    """
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    target = space.index(mode)
    factors = []
    for i, m in enumerate(space.modes):
        if i == target:
            local = _local_destroy(m.local_dim)
            if kind == "create":
                local = local.conj().T
            elif kind == "number":
                local = sp.diags(np.arange(m.local_dim, dtype=complex), 0)
            factors.append(local)
        elif m.statistics == FERMI and i < target and kind != "number" and space.modes[target].statistics == FERMI:
            factors.append(sp.diags(np.array([1.0, -1.0], dtype=complex), 0))
        else:
            factors.append(sp.identity(m.local_dim, dtype=complex))
    return reduce(lambda a, b: sp.kron(a, b, format="csr"), factors).tocsr()


@dataclass
class DensityMatrix:
    space: FockSpace
    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        d = self.space.total_dim
        if self.matrix.shape != (d, d):
            raise DimensionMismatch(f"density matrix shape {self.matrix.shape} does not match dimension {d}")

    @property
    def trace_defect(self) -> float:
        return abs(np.trace(self.matrix) - 1.0)

    @property
    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    @property
    def min_eigenvalue(self) -> float:
        herm = 0.5 * (self.matrix + self.matrix.conj().T)
        return float(np.linalg.eigvalsh(herm)[0])

    def expect(self, operator) -> complex:
        return complex((operator @ self.matrix).trace()) if sp.issparse(operator) else complex(np.trace(operator @ self.matrix))

    def validate(self, trace_tol=1e-10, herm_tol=1e-10, eig_tol=1e-10):
        if self.trace_defect > trace_tol:
            raise NonPhysicalState(f"trace defect {self.trace_defect:.2e}")
        if self.hermiticity_defect > herm_tol:
            raise NonPhysicalState(f"hermiticity defect {self.hermiticity_defect:.2e}")
        if self.min_eigenvalue < -eig_tol:
            raise NonPhysicalState(f"negative eigenvalue {self.min_eigenvalue:.2e}")
        return self


def fock_state(space: FockSpace, **occupations) -> DensityMatrix:
    """Projector on the basis state with the given occupations (others empty)."""
    index = 0
    for m in space.modes:
        n = occupations.pop(m.label, 0)
        if not 0 <= n < m.local_dim:
            raise ValueError(f"occupation {n} of mode {m.label!r} outside truncation")
        index = index * m.local_dim + n
    if occupations:
        raise UnknownMode(f"unknown modes {sorted(occupations)}")
    rho = np.zeros((space.total_dim, space.total_dim), dtype=complex)
    rho[index, index] = 1.0
    return DensityMatrix(space, rho)


def random_density_matrix(space: FockSpace, rng: np.random.Generator, support=None) -> DensityMatrix:
    """``G G^dag / tr(G G^dag)`` for a complex Gaussian ``G``, optionally confined to ``support``."""
    idx = np.arange(space.total_dim) if support is None else np.flatnonzero(support)
    k = idx.size
    g = rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))
    block = g @ g.conj().T
    block /= np.trace(block).real
    rho = np.zeros((space.total_dim, space.total_dim), dtype=complex)
    rho[np.ix_(idx, idx)] = block
    return DensityMatrix(space, rho)


@dataclass
class LindbladSystem:
    """Hamiltonian plus jump operators; each jump already includes its sqrt(rate)."""

    space: FockSpace
    hamiltonian: object
    jumps: list
    sector: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        d = self.space.total_dim
        self.hamiltonian = sp.csr_matrix(self.hamiltonian, dtype=complex)
        self.jumps = [sp.csr_matrix(j, dtype=complex) for j in self.jumps]
        for op in [self.hamiltonian, *self.jumps]:
            if op.shape != (d, d):
                raise DimensionMismatch(f"operator shape {op.shape} does not match dimension {d}")
        defect = abs(self.hamiltonian - self.hamiltonian.conj().T).max() if self.hamiltonian.nnz else 0.0
        if defect > 1e-12:
            raise ValueError(f"Hamiltonian not Hermitian (defect {defect:.2e})")
        decay = sum((j.conj().T @ j for j in self.jumps), sp.csr_matrix((d, d), dtype=complex))
        self._h_eff = (self.hamiltonian - 0.5j * decay).toarray()
        self._jumps_dense = [j.toarray() for j in self.jumps]

    def generator(self, rho: np.ndarray) -> np.ndarray:
        """``-i[H, rho] + sum_L (L rho L^dag - {L^dag L, rho} / 2)``."""
        h = self._h_eff
        out = -1j * (h @ rho - rho @ h.conj().T)
        for j in self._jumps_dense:
            out += j @ rho @ j.conj().T
        return out

    def heisenberg(self, operator):
        """Adjoint generator ``i[H, O] + sum_L (L^dag O L - {L^dag L, O} / 2)``."""
        o = operator.toarray() if sp.issparse(operator) else np.asarray(operator, dtype=complex)
        h = self._h_eff
        out = 1j * (h.conj().T @ o - o @ h)
        for j in self._jumps_dense:
            out += j.conj().T @ o @ j
        return out

    def superoperator(self) -> np.ndarray:
        """Generator as a ``d^2 x d^2`` matrix acting on the row-major ``vec(rho)``."""
        d = self.space.total_dim
        eye = np.eye(d)
        h = self._h_eff
        out = -1j * (np.kron(h, eye) - np.kron(eye, h.conj()))
        for j in self._jumps_dense:
            out += np.kron(j, j.conj())
        return out

    def generator_norm_bound(self) -> float:
        """Upper bound on the generator's norm from ``sqrt(|A|_1 |A|_inf)`` bounds."""
        def bound(a):
            a = abs(a)
            return math.sqrt(a.sum(axis=0).max() * a.sum(axis=1).max()) if a.nnz else 0.0
        return 2.0 * bound(self.hamiltonian) + 2.0 * sum(bound(j) ** 2 for j in self.jumps)


def _check_trunc(n_needed, trunc, what):
    if trunc < n_needed + 1:
        raise TruncationTooSmall(f"{what} truncation {trunc} cannot hold {n_needed} quanta")


def _as_count(n, what="n_total"):
    if float(n) != int(n):
        raise ValueError(f"{what} must be an integer for the exact oracle")
    return int(n)


def build_bb_system(params: BBParams, bose_trunc: int, cap: int = DEFAULT_CAP) -> LindbladSystem:
    """Modes ``a``, ``b`` (bosons, ``bose_trunc`` levels) and the neutrino ``c``.

    Missing ``eps_a/eps_b/e_nu`` default to ``(delta, 0, 0)``; missing
    ``u_a/u_b/u_ab`` default to the equal coupling ``u``.
    """
    n = _as_count(params.n_total)
    _check_trunc(n, bose_trunc, "boson")
    space = FockSpace([Mode("a", BOSE, bose_trunc), Mode("b", BOSE, bose_trunc), Mode("c", FERMI, 2)], cap)
    a, b, c = (space.op(x, "destroy") for x in "abc")
    na, nb, nc = (space.op(x, "number") for x in "abc")
    eps_a = params.delta if params.eps_a is None else params.eps_a
    eps_b = 0.0 if params.eps_b is None else params.eps_b
    e_nu = 0.0 if params.e_nu is None else params.e_nu
    u_a, u_b, u_ab = (params.u if x is None else x for x in (params.u_a, params.u_b, params.u_ab))
    g = params.g_complex
    vertex = c.conj().T @ b.conj().T @ a
    h = (eps_a * na + eps_b * nb + e_nu * nc + g * vertex + np.conj(g) * vertex.conj().T
         + u_a * na @ na + u_b * nb @ nb + u_ab * na @ nb)
    occ = space.occupations()
    sector = occ[:, 0] + occ[:, 1] <= n
    return LindbladSystem(space, h, [math.sqrt(2.0 * params.gamma_cap) * c], sector)


def build_bf_system(params: BFParams, bose_trunc: int, cap: int = DEFAULT_CAP) -> LindbladSystem:
    """Modes ``a`` (boson), ``b0..bM`` (fermionic ladder) and ``c`` (neutrino)."""
    n = _as_count(params.n_total)
    _check_trunc(n, bose_trunc, "boson")
    m = params.n_levels
    labels = [f"b{k}" for k in range(m)]
    space = FockSpace([Mode("a", BOSE, bose_trunc)] + [Mode(x, FERMI, 2) for x in labels] + [Mode("c", FERMI, 2)], cap)
    a, c = space.op("a", "destroy"), space.op("c", "destroy")
    energies = params.level_energies()
    h = params.e_a * space.op("a", "number") + params.e_nu * space.op("c", "number")
    for k, x in enumerate(labels):
        h = h + energies[k] * space.op(x, "number")
    b_alpha = space.op(labels[params.alpha], "destroy")
    jumps = [
        math.sqrt(params.g_alpha) * c.conj().T @ b_alpha.conj().T @ a,
        math.sqrt(params.gamma_cap) * c,
    ]
    rates = params.relaxation_rates()
    for k in range(1, m):
        jumps.append(math.sqrt(rates[k]) * space.op(labels[k - 1], "create") @ space.op(labels[k], "destroy"))
    occ = space.occupations()
    sector = occ[:, 0] + occ[:, 1:1 + m].sum(axis=1) <= n
    return LindbladSystem(space, h, jumps, sector)


def build_fb_system(params: FBParams, pair_trunc: int, bose_trunc: int, cap: int = DEFAULT_CAP) -> LindbladSystem:
    """Modes ``a`` (pairs) and ``b`` (daughter bosons) with decay and dephasing jumps."""
    n = params.n_total
    _check_trunc(n // 2, pair_trunc, "pair")
    _check_trunc(n, bose_trunc, "boson")
    space = FockSpace([Mode("a", BOSE, pair_trunc), Mode("b", BOSE, bose_trunc)], cap)
    a, b = space.op("a", "destroy"), space.op("b", "destroy")
    na, nb = space.op("a", "number"), space.op("b", "number")
    bd = b.conj().T
    h = params.e_a * na + params.e_b * nb
    jumps = [
        math.sqrt(params.gamma_decay) * bd @ bd @ a,
        math.sqrt(params.gamma_phi_a) * na,
        math.sqrt(params.gamma_phi_b) * nb,
    ]
    occ = space.occupations()
    sector = 2 * occ[:, 0] + occ[:, 1] <= n
    return LindbladSystem(space, h, jumps, sector)


def _rk4_step(system: LindbladSystem, rho: np.ndarray, h: float) -> np.ndarray:
    rhs = system.generator
    k1 = rhs(rho)
    k2 = rhs(rho + 0.5 * h * k1)
    k3 = rhs(rho + 0.5 * h * k2)
    k4 = rhs(rho + h * k3)
    return rho + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _rk4_step_size(system: LindbladSystem, rho0: np.ndarray, local_tol: float) -> float:
    def step(rho, h):
        return _rk4_step(system, rho, h)

    lam = system.generator_norm_bound()
    h = 1.0 / lam if lam > 0 else 1.0
    for _ in range(60):
        full = step(rho0, h)
        half = step(step(rho0, 0.5 * h), 0.5 * h)
        if np.max(np.abs(full - half)) <= local_tol:
            break
        h *= 0.5
    return h


def rk4_propagator(superop: np.ndarray, h: float) -> np.ndarray:
    """One classical RK4 step of ``dv/dt = L v`` as a matrix: ``sum_{k<=4} (hL)^k / k!``."""
    m = h * superop
    eye = np.eye(m.shape[0], dtype=complex)
    return eye + m @ (eye + m @ (eye + m @ (eye + m / 4.0) / 3.0) / 2.0)


def evolve(system: LindbladSystem, rho0: DensityMatrix, sample_times, step: float | None = None,
           local_tol: float = 1e-12) -> list:
    """Propagate ``rho0`` with fixed-step RK4 and return the state at each sample time.

    The step is the largest power-of-two fraction of ``1 / |L|`` whose
    step-doubling error estimate at ``rho0`` is below ``local_tol``. Each gap
    between samples is split into ``n`` equal steps. Because the generator is
    linear and time independent, those ``n`` RK4 steps equal the ``n``-th power
    of the RK4 propagator matrix, which is taken by repeated squaring. Spaces
    larger than ``DENSE_PROPAGATOR_DIM`` take the same steps one at a time.

    Raises
    ------
    NonPhysicalState
        If a sampled state is non-finite, has a trace defect above 1e-8 or an
        eigenvalue below -1e-8, which signals a step that is too coarse.
    """
    if rho0.space.total_dim != system.space.total_dim:
        raise DimensionMismatch("initial state and system live on different spaces")
    ts = np.asarray(sample_times, dtype=float)
    if ts.size == 0 or np.any(np.diff(ts) <= 0) or ts[0] < 0:
        raise ValueError("sample_times must be non-negative and strictly increasing")
    d = system.space.total_dim
    if step is None:
        step = _rk4_step_size(system, rho0.matrix, local_tol)
    dense = d <= DENSE_PROPAGATOR_DIM
    superop = system.superoperator() if dense else None

    powers = {}
    rho_t = rho0.matrix.astype(complex)
    t = 0.0
    states = []
    for t_next in ts:
        if t_next > t:
            n = max(1, math.ceil((t_next - t) / step - 1e-9))
            h = (t_next - t) / n
            if dense:
                if (n, h) not in powers:
                    powers[(n, h)] = np.linalg.matrix_power(rk4_propagator(superop, h), n)
                rho_t = (powers[(n, h)] @ rho_t.reshape(-1)).reshape(d, d)
            else:
                for _ in range(n):
                    rho_t = _rk4_step(system, rho_t, h)
            t = t_next
        rho = DensityMatrix(system.space, rho_t.copy())
        if not np.all(np.isfinite(rho.matrix)):
            raise NonPhysicalState(f"t={t_next}: non-finite density matrix")
        if rho.trace_defect > 1e-8 or rho.min_eigenvalue < -1e-8:
            raise NonPhysicalState(
                f"t={t_next}: trace defect {rho.trace_defect:.2e}, min eigenvalue {rho.min_eigenvalue:.2e}")
        states.append(rho)
    return states


def check_eom_identity(system: LindbladSystem, rho: DensityMatrix, lhs_observable, rhs_expression) -> float:
    """Residual of ``d<lhs>/dt = <rhs>`` under the full generator at state ``rho``.

    Returns ``|tr(lhs L[rho]) - tr(rhs rho)| / max(1, |tr(rhs rho)|)``.
    """
    d = system.space.total_dim
    for op in (rho.matrix, lhs_observable, rhs_expression):
        if op.shape != (d, d):
            raise DimensionMismatch(f"operator shape {op.shape} does not match dimension {d}")
    lhs = lhs_observable.toarray() if sp.issparse(lhs_observable) else np.asarray(lhs_observable)
    rate = np.trace(lhs @ system.generator(rho.matrix))
    claimed = rho.expect(rhs_expression)
    return abs(rate - claimed) / max(1.0, abs(claimed))


# --- identity battery -----------------------------------------------------------------

def hcoll_commutator_formula(space: FockSpace, u_a: float, u_b: float, u_ab: float):
    """Three-term closed form of ``[H_coll, a^dag b c]``, operator ordering ``O n``."""
    o = space.op("a", "create") @ space.op("b", "destroy") @ space.op("c", "destroy")
    na, nb = space.op("a", "number"), space.op("b", "number")
    return (2 * u_a - u_ab) * o @ na - (2 * u_b - u_ab) * o @ nb + (u_a + u_b - u_ab) * o


def hcoll_commutator_residual(u_a: float, u_b: float, u_ab: float, bose_trunc: int = 4) -> float:
    """Max-norm distance between the direct commutator and its closed form."""
    space = FockSpace([Mode("a", BOSE, bose_trunc), Mode("b", BOSE, bose_trunc), Mode("c", FERMI, 2)])
    na, nb = space.op("a", "number"), space.op("b", "number")
    h_coll = u_a * na @ na + u_b * nb @ nb + u_ab * na @ nb
    o = space.op("a", "create") @ space.op("b", "destroy") @ space.op("c", "destroy")
    direct = h_coll @ o - o @ h_coll
    diff = direct - hcoll_commutator_formula(space, u_a, u_b, u_ab)
    return float(abs(diff).max()) if diff.nnz else 0.0


def bb_identities(system: LindbladSystem, params: BBParams) -> dict:
    """Exact equations of motion for ``n_a``, ``n_c`` and ``S = <a^dag b c>``."""
    sp_ = system.space
    a, b, c = (sp_.op(x, "destroy") for x in "abc")
    na, nb, nc = (sp_.op(x, "number") for x in "abc")
    one = sp_.identity()
    g = params.g_complex
    s_op = a.conj().T @ b @ c
    vertex = c.conj().T @ b.conj().T @ a
    flow = 1j * (g * vertex - np.conj(g) * s_op)
    u_a, u_b, u_ab = (params.u if x is None else x for x in (params.u_a, params.u_b, params.u_ab))
    eps_a = params.delta if params.eps_a is None else params.eps_a
    eps_b = 0.0 if params.eps_b is None else params.eps_b
    e_nu = 0.0 if params.e_nu is None else params.e_nu
    delta = eps_a - eps_b - e_nu
    source = nc @ nb @ (one + na) - na @ (one + nb) @ (one - nc)
    s_rhs = ((1j * delta - params.gamma_cap) * s_op + 1j * g * source
             + 1j * hcoll_commutator_formula(sp_, u_a, u_b, u_ab))
    return {
        "bb_population": (na, flow),
        "bb_neutrino": (nc, -flow - 2.0 * params.gamma_cap * nc),
        "bb_correlator": (s_op, s_rhs),
    }


def bf_identities(system: LindbladSystem, params: BFParams) -> dict:
    sp_ = system.space
    one = sp_.identity()
    m = params.n_levels
    na, nc = sp_.op("a", "number"), sp_.op("c", "number")
    nk = [sp_.op(f"b{k}", "number") for k in range(m)]
    p = params.g_alpha * na @ (one - nk[params.alpha]) @ (one - nc)
    rates = params.relaxation_rates()
    out = {
        "bf_atom_decay": (na, -p),
        "bf_neutrino": (nc, p - params.gamma_cap * nc),
    }
    for k in range(m):
        rhs = p if k == params.alpha else 0 * one
        if k > 0:
            rhs = rhs - rates[k] * nk[k] @ (one - nk[k - 1])
        if k < m - 1:
            rhs = rhs + rates[k + 1] * nk[k + 1] @ (one - nk[k])
        out[f"bf_level_{k}"] = (nk[k], rhs)
    return out


def fb_identities(system: LindbladSystem, params: FBParams) -> dict:
    sp_ = system.space
    one = sp_.identity()
    na, nb = sp_.op("a", "number"), sp_.op("b", "number")
    cubic = params.gamma_decay * na @ (nb + one) @ (nb + 2 * one)
    return {"fb_pair_decay": (na, -cubic), "fb_boson_growth": (nb, 2 * cubic)}


@dataclass
class IdentityResult:
    name: str
    max_residual: float
    n_states: int
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_residual < self.tolerance


# parameter sets are arbitrary but deliberately generic: complex g, detuning,
# unequal contact couplings, non-uniform relaxation, non-zero dephasing
BATTERY_BB = BBParams(n_total=2, g=0.7, g_phase=0.4, gamma_cap=1.3, delta=0.25, eps_a=1.1, eps_b=0.6,
                      e_nu=0.25, u=0.1, u_a=0.11, u_b=0.23, u_ab=0.05)
BATTERY_BF = BFParams(n_total=2, alpha=1, g_alpha=0.8, gamma_th=0.5, gamma_cap=1.7,
                      e_a=2.0, e_levels=(0.0, 0.4), e_nu=0.9, gamma_profile=(0.0, 0.45))
BATTERY_FB = FBParams(n_total=4, gamma_decay=0.3, gamma_phi_a=0.7, gamma_phi_b=0.2, e_a=1.5, e_b=0.4)


def identity_battery(seed: int = 0, n_states: int = 20, tolerance: float = 1e-8) -> list:
    """Check every exact equation of motion on ``n_states`` random sector states per model."""
    rng = np.random.default_rng(seed)
    cases = [
        (build_bb_system(BATTERY_BB, 3), BATTERY_BB, bb_identities),
        (build_bf_system(BATTERY_BF, 3), BATTERY_BF, bf_identities),
        (build_fb_system(BATTERY_FB, 3, 5), BATTERY_FB, fb_identities),
    ]
    results = []
    for system, params, identities in cases:
        table = identities(system, params)
        worst = {name: 0.0 for name in table}
        for _ in range(n_states):
            rho = random_density_matrix(system.space, rng, system.sector)
            for name, (lhs, rhs) in table.items():
                worst[name] = max(worst[name], check_eom_identity(system, rho, lhs, rhs))
        results.extend(IdentityResult(name, r, n_states, tolerance) for name, r in worst.items())
    commutator = hcoll_commutator_residual(0.11, 0.23, 0.05)
    results.append(IdentityResult("hcoll_commutator", commutator, 1, 1e-12))
    return results


def bb_mean_field_deviation(params: BBParams, sample_times, bose_trunc: int | None = None) -> dict:
    """Exact vs full mean-field ``<n_b>`` for small ``N``; reported, not asserted."""
    n = _as_count(params.n_total)
    system = build_bb_system(params, bose_trunc or n + 1)
    ts = np.asarray(sample_times, dtype=float)
    states = evolve(system, fock_state(system.space, a=n), ts)
    nb = system.space.op("b", "number")
    exact = np.array([rho.expect(nb).real for rho in states])
    mean_field = bb_simulate(params, "full", ts)["n_b"]
    return {"times": ts, "exact_n_b": exact, "mean_field_n_b": mean_field,
            "max_deviation": float(np.max(np.abs(exact - mean_field)))}
