import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from collective_decay.bb import (N_A, N_B, N_C, S_IM, S_RE, BBParams, bb_adiabatic_s, bb_full_rhs, bb_half_time,
                                 bb_inflection, bb_interacting_rhs, bb_logistic_closed_form,
                                 bb_logistic_crossing_time, bb_logistic_rhs, bb_omega, bb_simulate,
                                 peak_rate_fraction)
from collective_decay.ode import IntegratorConfig


def unit_omega(n, **kw):
    # g chosen so that omega = 1 with gamma_cap = 1 and no detuning
    return BBParams(n_total=n, g=math.sqrt(0.5), gamma_cap=1.0, **kw)


class TestOmega:
    def test_zero_coupling(self):
        assert bb_omega(BBParams(n_total=10, g=0.0, gamma_cap=1.0)) == 0.0

    def test_substitution(self):
        assert bb_omega(BBParams(n_total=10, g=1.0, gamma_cap=10.0)) == pytest.approx(0.2, rel=1e-15)

    def test_detuning_halves_lorentzian(self):
        p = BBParams(n_total=10, g=1.3, gamma_cap=2.0, delta=2.0)
        assert bb_omega(p) == pytest.approx(1.3**2 / 2.0, rel=1e-15)


class TestParams:
    def test_validation(self):
        with pytest.raises(ValueError):
            BBParams(n_total=0, g=1.0, gamma_cap=1.0)
        with pytest.raises(ValueError):
            BBParams(n_total=1, g=-1.0, gamma_cap=1.0)
        with pytest.raises(ValueError):
            BBParams(n_total=1, g=1.0, gamma_cap=0.0)
        with pytest.raises(ValueError):
            BBParams(n_total=1, g=1.0, gamma_cap=1.0, u=-0.1)
        with pytest.raises(ValueError):
            BBParams(n_total=1, g=1.0, gamma_cap=1.0, delta=0.5, eps_a=1.0, eps_b=0.0, e_nu=0.0)

    def test_energies_consistent_with_delta(self):
        p = BBParams(n_total=1, g=1.0, gamma_cap=1.0, delta=0.5, eps_a=1.0, eps_b=0.25, e_nu=0.25)
        assert p.delta == 0.5

    def test_eta_constructor(self):
        p = BBParams.with_eta(1e4, 1e5, 2.0, g=1.0)
        assert p.eta == pytest.approx(1e4, rel=1e-14)


class TestFullRhs:
    def test_initial_state(self):
        p = BBParams(n_total=7, g=0.3, gamma_cap=2.0, g_phase=0.4)
        d = bb_full_rhs([7.0, 0.0, 0.0, 0.0, 0.0], p)
        assert d[N_A] == d[N_B] == d[N_C] == 0.0
        ds = complex(d[S_RE], d[S_IM])
        assert ds == pytest.approx(-1j * p.g_complex * 7.0, abs=1e-15)

    def test_decoupled(self):
        p = BBParams(n_total=5, g=0.0, gamma_cap=1.5, delta=0.2, u=0.1)
        state = [3.0, 2.0, 0.4, 0.3, -0.2]
        d = bb_full_rhs(state, p)
        assert d[N_A] == 0.0 and d[N_B] == 0.0
        assert d[N_C] == pytest.approx(-2 * 1.5 * 0.4)
        delta_eff = 0.2 + 0.1 * (3.0 - 2.0 + 1.0)
        expected = (1j * delta_eff - 1.5) * complex(0.3, -0.2)
        assert complex(d[S_RE], d[S_IM]) == pytest.approx(expected, abs=1e-15)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-10, 10), min_size=5, max_size=5), st.floats(0, 2 * math.pi))
    def test_population_flow_cancels(self, state, phase):
        p = BBParams(n_total=10, g=0.7, gamma_cap=1.1, g_phase=phase, u=0.05, delta=0.3)
        d = bb_full_rhs(state, p)
        assert d[N_A] + d[N_B] == 0.0


class TestAdiabaticS:
    def test_empty_condensate(self):
        assert bb_adiabatic_s(0.0, 3.0, BBParams(n_total=3, g=1.0, gamma_cap=1.0)) == 0

    def test_resonance(self):
        p = BBParams(n_total=10, g=0.8, gamma_cap=2.0)
        s = bb_adiabatic_s(4.0, 2.0, p)
        assert s == pytest.approx(-1j * 0.8 * 4.0 * 3.0 / 2.0)
        assert (np.conj(p.g_complex) * s).imag == pytest.approx(-0.8**2 * 4.0 * 3.0 / 2.0)

    def test_complex_arithmetic(self):
        s = bb_adiabatic_s(1.0, 0.0, BBParams(n_total=1, g=1.0, gamma_cap=1.0, delta=1.0))
        assert s == pytest.approx(0.5 - 0.5j, abs=1e-15)


class TestReducedLaws:
    def test_logistic_rhs(self):
        p = unit_omega(100)
        assert bb_logistic_rhs(100.0, p) == pytest.approx(0.0, abs=1e-12)
        assert bb_logistic_rhs(0.0, p) == pytest.approx(100.0, rel=1e-14)
        assert bb_logistic_rhs(50.0, p) == pytest.approx(2550.0, rel=1e-14)

    def test_interacting_rhs(self):
        p = BBParams.with_eta(3.0, 10, 1.0, g=math.sqrt(0.5))
        assert bb_interacting_rhs(0.0, p) == pytest.approx(2.5, rel=1e-14)
        assert bb_interacting_rhs(5.0, p) == pytest.approx(6.0 * 5.0, rel=1e-14)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(0, 1000))
    def test_interacting_reduces_at_zero_eta(self, n_b):
        p = unit_omega(1000)
        assert bb_interacting_rhs(n_b, p) == bb_logistic_rhs(n_b, p)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(0, 1e4))
    def test_midpoint_rate_independent_of_eta(self, eta):
        p = BBParams.with_eta(eta, 1000, 1.0, g=math.sqrt(0.5))
        assert bb_interacting_rhs(500.0, p) == pytest.approx(501.0 * 500.0, rel=1e-13)


class TestClosedForm:
    def test_initial_and_saturation(self):
        assert bb_logistic_closed_form(0.0, 100, 1.0) == 0.0
        t = 50.0 / 101.0
        assert abs(bb_logistic_closed_form(t, 100, 1.0) - 1.0) < 1e-15

    def test_overflow_safe(self):
        values = bb_logistic_closed_form(np.array([0.0, 1.0, 10.0]), 1e5, 1.0)
        assert np.all(np.isfinite(values))
        assert values[-1] == 1.0

    def test_half_time_inversion(self):
        for n in (1, 10, 1e3, 1e5):
            t50 = bb_half_time(n, 0.7)
            assert bb_logistic_closed_form(t50, n, 0.7) == pytest.approx(0.5, abs=1e-13)
            assert bb_logistic_crossing_time(0.5, n, 0.7) == pytest.approx(t50, rel=1e-14)

    @pytest.mark.parametrize("n", [10, 1e3, 1e5])
    def test_integration_matches(self, n):
        p = unit_omega(n)
        ts = np.linspace(0, 20 / (n + 1), 401)
        traj = bb_simulate(p, "logistic", ts)
        assert np.max(np.abs(traj["n_b_frac"] - bb_logistic_closed_form(ts, n, p.omega))) < 1e-8


class TestSimulate:
    def test_logistic_saturates(self):
        traj = bb_simulate(unit_omega(50), "logistic", np.linspace(0, 40 / 51, 51))
        assert traj["n_b_frac"][-1] == pytest.approx(1.0, abs=1e-8)

    def test_zero_eta_identity(self):
        ts = np.linspace(0, 20 / 1001, 201)
        a = bb_simulate(unit_omega(1000), "logistic", ts)
        b = bb_simulate(unit_omega(1000), "interacting", ts)
        assert np.max(np.abs(a["n_b_frac"] - b["n_b_frac"])) <= 1e-10

    def test_peak_rate_at_analytic_argmax(self):
        n = 1000
        ts = np.linspace(0, 20 / (n + 1), 4001)
        traj = bb_simulate(unit_omega(n), "logistic", ts)
        i = int(np.argmax(traj["rate"]))
        spacing = max(abs(traj["n_b"][i] - traj["n_b"][i - 1]), abs(traj["n_b"][i + 1] - traj["n_b"][i]))
        assert abs(traj["n_b"][i] - (n - 1) / 2) <= spacing
        assert peak_rate_fraction(traj) == pytest.approx(traj["n_b_frac"][i])

    def test_inflection_root(self):
        assert bb_inflection(unit_omega(1000), "logistic") == pytest.approx(0.4995, rel=1e-12)
        # contact interactions push the inflection upwards (frozen reference values)
        p0 = BBParams.with_eta(0.0, 1e5, 1.0, g=1.0)
        p4 = BBParams.with_eta(1e4, 1e5, 1.0, g=1.0)
        assert bb_inflection(p0) - 0.5 == pytest.approx(-5e-6, rel=1e-6)
        assert bb_inflection(p4) - 0.5 == pytest.approx(-4.9995e-10, rel=1e-3)
        assert bb_inflection(p4) > bb_inflection(p0)

    def test_inflection_non_decreasing_in_eta(self):
        values = [bb_inflection(BBParams.with_eta(eta, 1000, 1.0, g=1.0)) for eta in (0, 1, 10, 100)]
        assert all(b >= a for a, b in zip(values, values[1:]))

    def test_full_variant_conservation_and_bounds(self):
        p = BBParams(n_total=50, g=1.0, gamma_cap=1e3)
        t_end = 1.5 * bb_half_time(50, p.omega)
        traj = bb_simulate(p, "full", np.linspace(0, t_end, 201))
        assert traj.metadata["conservation_drift"] <= 1e-8 * 50
        assert np.all(traj["n_b_frac"] >= -1e-12) and np.all(traj["n_b_frac"] <= 1 + 1e-12)
        assert np.all(traj["n_c"] >= -1e-12) and np.all(traj["n_c"] <= 1 + 1e-9)
        # the neutrino mode stays nearly empty when it escapes fast
        assert np.max(traj["n_c"]) < 1e-3

    def test_full_variant_phase_invariance(self):
        ts = np.linspace(0, 0.3, 31)
        a = bb_simulate(BBParams(n_total=20, g=1.0, gamma_cap=30.0, g_phase=0.0), "full", ts)
        b = bb_simulate(BBParams(n_total=20, g=1.0, gamma_cap=30.0, g_phase=math.pi / 3), "full", ts)
        for col in ("n_a", "n_b", "n_c"):
            assert np.max(np.abs(a[col] - b[col])) <= 1e-10
        # S itself rotates with the phase of g
        s_a = a["s_re"] + 1j * a["s_im"]
        s_b = b["s_re"] + 1j * b["s_im"]
        assert np.max(np.abs(s_b - s_a * np.exp(1j * math.pi / 3))) < 1e-8

    def test_full_variant_half_time_matches_logistic(self):
        n = 100
        p = BBParams(n_total=n, g=1.0, gamma_cap=1e3)
        t50_ref = bb_half_time(n, p.omega)
        traj = bb_simulate(p, "full", np.linspace(0, 1.25 * t50_ref, 101))
        assert abs(traj.crossing_time("n_b_frac", 0.5) / t50_ref - 1) < 0.05

    def test_metadata(self):
        traj = bb_simulate(unit_omega(10), "logistic", np.linspace(0, 1, 11), IntegratorConfig(rel_tol=1e-10))
        meta = traj.metadata
        assert meta["model"] == "bb_logistic"
        assert meta["integrator"]["rel_tol"] == 1e-10
        assert meta["omega"] == pytest.approx(1.0)
        assert "tool_version" in meta and "conservation_drift" in meta

    def test_unknown_variant(self):
        with pytest.raises(ValueError):
            bb_simulate(unit_omega(10), "quantum", [0.0, 1.0])
