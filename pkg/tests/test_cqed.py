import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from modegap import cqed
from modegap.errors import ParameterError

UEV = 1e-6


def make_sys(Ex=1.28, Ec=1.28, Gx=78e-6, Gc=160e-6, hg=72.94e-6):
    return cqed.CoupledSystem(Ex=Ex, Ec=Ec, Gx=Gx, Gc=Gc, hg=hg)


class TestCouplingConstant:
    def test_inas_dot_in_gaas_cavity(self):
        # f = 10.7, eps_r = 3.46^2, V = 1.3 (lambda0/n)^3 at 1.28 eV
        lam0_m = cqed.HC_EV_NM / 1.28 * 1e-9
        V = 1.3 * (lam0_m / 3.46) ** 3
        hg = cqed.coupling_constant(10.7, V, 3.46 ** 2)
        assert 2 * hg == pytest.approx(208e-6, rel=0.01)

    def test_quadruple_volume_halves_coupling(self):
        V = 2.85e-20
        hg1 = cqed.coupling_constant(10.7, V, 12.0)
        hg4 = cqed.coupling_constant(10.7, 4 * V, 12.0)
        assert hg4 == pytest.approx(hg1 / 2, rel=1e-12)

    def test_zero_oscillator_strength(self):
        assert cqed.coupling_constant(0.0, 1e-20, 12.0) == 0.0

    @given(st.floats(0.1, 100.0))
    def test_volume_homogeneity(self, c):
        base = cqed.coupling_constant(10.7, 1e-20, 12.0)
        scaled = cqed.coupling_constant(10.7, c * 1e-20, 12.0)
        assert scaled == pytest.approx(base / math.sqrt(c), rel=1e-12)

    def test_invalid_inputs(self):
        with pytest.raises(ParameterError):
            cqed.coupling_constant(10.7, -1e-20, 12.0)
        with pytest.raises(ParameterError):
            cqed.coupling_constant(10.7, 1e-20, 0.5)


class TestRabiSplitting:
    def test_equal_linewidths_give_two_hg(self):
        s = make_sys(Gx=100e-6, Gc=100e-6, hg=50e-6)
        assert cqed.rabi_splitting(s) == pytest.approx(100e-6, rel=1e-12)

    def test_paper_splitting(self):
        # hg inverted from Eq. (1) against dE = 140 ueV, Gc = 160, Gx = 78
        s = make_sys()
        assert cqed.rabi_splitting(s) == pytest.approx(140.0e-6, abs=0.1e-6)

    def test_predicted_splitting_at_q8000(self):
        s = make_sys(hg=104e-6)
        assert cqed.rabi_splitting(s) == pytest.approx(203.9e-6, abs=0.1e-6)

    def test_weak_coupling_collapse(self):
        s = make_sys(hg=20e-6)   # hg < |Gc-Gx|/4 = 20.5 ueV
        assert cqed.rabi_splitting(s) == 0.0

    @given(st.floats(1e-7, 1e-3), st.floats(1e-7, 1e-3), st.floats(0, 5e-4))
    def test_monotone_in_hg_and_zero_on_collapse(self, gx, gc, hg):
        s1 = make_sys(Gx=gx, Gc=gc, hg=hg)
        s2 = make_sys(Gx=gx, Gc=gc, hg=hg * 1.5 + 1e-9)
        d1, d2 = cqed.rabi_splitting(s1), cqed.rabi_splitting(s2)
        assert d2 >= d1
        if hg <= abs(gc - gx) / 4:
            assert d1 == 0.0


class TestEigenmodes:
    def test_bare_states_at_zero_coupling(self):
        s = make_sys(Ex=1.281, Ec=1.280, hg=0.0)
        m = cqed.eigenmodes(s)
        assert m.E_minus == pytest.approx(1.280, rel=1e-12)
        assert m.E_plus == pytest.approx(1.281, rel=1e-12)
        assert m.G_minus == pytest.approx(160e-6, rel=1e-9)
        assert m.G_plus == pytest.approx(78e-6, rel=1e-9)

    def test_splitting_matches_rabi_at_zero_detuning(self):
        s = make_sys()
        m = cqed.eigenmodes(s)
        assert m.splitting == pytest.approx(cqed.rabi_splitting(s), rel=1e-12)

    def test_equal_linewidths_at_resonance(self):
        m = cqed.eigenmodes(make_sys())
        assert m.G_plus == pytest.approx(119e-6, rel=1e-9)
        assert m.G_minus == pytest.approx(119e-6, rel=1e-9)

    def test_perturbative_limit(self):
        hg = 100e-6
        s = make_sys(Ex=1.28 + 50 * hg, Ec=1.28, hg=hg)
        m = cqed.eigenmodes(s)
        assert abs(m.E_plus - s.Ex) < hg / 50
        assert abs(m.E_minus - s.Ec) < hg / 50
        assert m.weights_plus[0] > 0.999     # upper branch excitonic
        assert m.weights_minus[1] > 0.999    # lower branch photonic

    @given(st.floats(0.5, 2.0), st.floats(-5e-3, 5e-3), st.floats(1e-6, 1e-3),
           st.floats(1e-6, 1e-3), st.floats(0, 5e-4))
    def test_trace_and_weight_invariants(self, ec, delta, gx, gc, hg):
        s = make_sys(Ex=ec + delta, Ec=ec, Gx=gx, Gc=gc, hg=hg)
        m = cqed.eigenmodes(s)
        assert m.E_plus + m.E_minus == pytest.approx(s.Ex + s.Ec, rel=1e-12)
        assert m.G_plus + m.G_minus == pytest.approx(gx + gc, rel=1e-12)
        assert sum(m.weights_plus) == pytest.approx(1.0, abs=1e-12)
        assert sum(m.weights_minus) == pytest.approx(1.0, abs=1e-12)

    def test_branch_positions_matches_eigenmodes(self):
        s = make_sys(Ex=1.2805, Ec=1.2798)
        m = cqed.eigenmodes(s)
        lo, hi = cqed.branch_positions(s.Ex, s.Ec, s.Gx, s.Gc, s.hg)
        assert float(lo) == pytest.approx(m.E_minus, rel=1e-14)
        assert float(hi) == pytest.approx(m.E_plus, rel=1e-14)


class TestStrongCoupling:
    def test_paper_margin(self):
        ok, margin = cqed.strong_coupling_test(140e-6, 160e-6)
        assert ok
        assert margin == pytest.approx(60e-6, rel=1e-12)

    def test_boundary_is_strict(self):
        ok, margin = cqed.strong_coupling_test(80e-6, 160e-6)
        assert not ok
        assert margin == 0.0

    def test_weak(self):
        ok, _ = cqed.strong_coupling_test(50e-6, 160e-6)
        assert not ok


class TestSplittingVsQ:
    def test_onset_closed_form(self):
        q = cqed.onset_q(1.28, 104e-6, 78e-6)
        assert q == pytest.approx(1.28 / 494e-6, rel=1e-12)
        assert q == pytest.approx(2591, abs=1)

    def test_saturation_at_q_10k(self):
        curve = cqed.splitting_vs_q(1.28, 104e-6, 78e-6, [1e3, 1e4, 1e5])
        de_10k = curve.dE[1]
        assert de_10k == pytest.approx(206.5e-6, abs=0.1e-6)
        assert de_10k >= 0.99 * 2 * 104e-6
        assert curve.saturation_q < 1e4

    def test_asymptote_lossless_exciton(self):
        # dE -> 2*hg at infinite Q when the exciton losses vanish
        curve = cqed.splitting_vs_q(1.28, 104e-6, 0.0, [1e9, 1e12])
        assert curve.dE[-1] == pytest.approx(208e-6, rel=1e-4)

    def test_loss_matched_point_reaches_two_hg(self):
        # per Eq. (1) the splitting equals 2*hg exactly where Gc = Gx
        q_match = 1.28 / 78e-6
        curve = cqed.splitting_vs_q(1.28, 104e-6, 78e-6, [q_match])
        assert curve.dE[0] == pytest.approx(2 * 104e-6, rel=1e-9)

    def test_curve_monotone_up_to_loss_matching(self):
        q_match = 1.28 / 78e-6
        curve = cqed.splitting_vs_q(1.28, 104e-6, 78e-6,
                                    np.logspace(3, np.log10(q_match), 200))
        assert np.all(np.diff(curve.dE) >= 0)

    def test_bad_grid_rejected(self):
        with pytest.raises(ParameterError):
            cqed.splitting_vs_q(1.28, 104e-6, 78e-6, [1e4, 1e3])


class TestTuning:
    def model(self, drift=0.0):
        return cqed.TuningModel(
            exciton=cqed.VarshniParams(E0=1.2803), Ec0=1.28, drift=drift)

    def test_varshni_at_zero(self):
        assert cqed.exciton_energy(0.0, self.model()) == 1.2803

    def test_varshni_default_shift(self):
        m = self.model()
        d = cqed.exciton_energy(30.0, m) - cqed.exciton_energy(5.0, m)
        expected = -(5.405e-4 * 900 / 234 - 5.405e-4 * 25 / 209)
        assert d == pytest.approx(expected, rel=1e-9)
        assert d == pytest.approx(-2.014e-3, abs=2e-6)

    def test_varshni_monotone_decreasing(self):
        m = self.model()
        temps = np.linspace(0, 300, 60)
        e = [cqed.exciton_energy(t, m) for t in temps]
        assert np.all(np.diff(e) < 0)

    def test_cavity_drift(self):
        assert cqed.cavity_energy(25.0, self.model()) == 1.28
        m = self.model(drift=2e-6)
        assert cqed.cavity_energy(25.0, m) == pytest.approx(1.28 + 50e-6, rel=1e-12)
