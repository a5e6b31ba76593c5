import math

import numpy as np
import pytest
from scipy import constants as C
from scipy.signal import hilbert

from modegap import fdtd, geometry
from modegap.errors import InstabilityError, ParameterError

from conftest import uniform_map


def vacuum_source(f_cells_per_lambda=20.0, dx=20.0, df_ratio=5.0):
    lam = f_cells_per_lambda * dx * 1e-9
    f0 = C.c / lam
    return f0, f0 / df_ratio


class TestInit:
    def test_dt_formula(self):
        m = uniform_map(60, 50, dx=12.5)
        st = fdtd.init(m, S=0.5, pml_cells=10)
        assert st.dt == pytest.approx(1.4741e-17, rel=1e-4)
        assert st.dt == 0.5 * 12.5e-9 / (C.c * math.sqrt(2.0))

    def test_courant_violation_rejected(self):
        m = uniform_map(60, 50)
        with pytest.raises(ParameterError):
            fdtd.init(m, S=1.01)

    def test_pml_profiles_cover_two_strips_interior_untouched(self):
        m = uniform_map(64, 48)
        st = fdtd.init(m, S=0.5, pml_cells=10)
        for b, a, n in ((st.bhz_x, st.ahz_x, 64), (st.bhz_y, st.ahz_y, 48)):
            absorbing = np.nonzero(a != 0.0)[0]
            assert absorbing.size == 2 * 10
            interior = np.setdiff1d(np.arange(n), absorbing)
            assert np.all(b[interior] == 1.0)
            assert np.all(a[interior] == 0.0)
            # graded symmetrically
            assert b[absorbing[:10]] == pytest.approx(b[absorbing[-10:]][::-1], rel=1e-12)

    def test_small_pml_rejected(self):
        m = uniform_map(60, 50)
        with pytest.raises(ParameterError):
            fdtd.init(m, pml_cells=5)
        fdtd.init(m, pml_cells=0)   # closed box allowed


class TestStep:
    def test_vacuum_no_source_stays_zero(self):
        m = uniform_map(60, 50)
        st = fdtd.init(m, pml_cells=0)
        fdtd.run(st, 200)
        assert np.all(st.hz == 0.0)
        assert np.all(st.ex == 0.0)
        assert np.all(st.ey == 0.0)

    def test_single_step_stencil_locality(self):
        m = uniform_map(61, 51)
        st = fdtd.init(m, pml_cells=0)
        st.hz[25, 30] = 1.0   # H impulse at one cell
        fdtd.step(st)
        hz_nz = np.argwhere(st.hz != 0.0)
        assert hz_nz.tolist() == [[25, 30]]
        ex_nz = np.argwhere(st.ex != 0.0)
        ey_nz = np.argwhere(st.ey != 0.0)
        assert set(map(tuple, ex_nz)) == {(25, 30), (26, 30)}
        assert set(map(tuple, ey_nz)) == {(25, 30), (25, 31)}

    def test_pulse_speed(self):
        # 40 cells/lambda keeps group-velocity dispersion under the tolerance
        dx = 20.0
        m = uniform_map(260, 70, dx=dx)
        st = fdtd.init(m, pml_cells=10)
        f0, df = vacuum_source(40.0, dx)
        src = fdtd.SourceSpec(j=35, i=30, f0=f0, df=df)
        st.add_source(src)
        probe = st.add_probe(35, 130, "hz")
        fdtd.run(st, src.t_off + 3000)
        env = np.abs(hilbert(probe.samples))
        k = int(np.argmax(env))
        # parabolic sub-step refinement of the envelope peak
        if 0 < k < env.size - 1:
            denom = env[k - 1] - 2 * env[k] + env[k + 1]
            k = k + 0.5 * (env[k - 1] - env[k + 1]) / denom
        arrival = k - 0.5 * src.t_off
        expected = 100 * dx * 1e-9 / C.c / st.dt
        assert abs(arrival - expected) <= 2.0


class TestRun:
    def test_energy_conserved_in_closed_vacuum_box(self):
        m = uniform_map(100, 90)
        st = fdtd.init(m, pml_cells=0, check_every=100)
        f0, df = vacuum_source()
        src = fdtd.SourceSpec(j=45, i=50, f0=f0, df=df)
        st.add_source(src)
        fdtd.run(st, src.t_off + 10)
        res = fdtd.run(st, 10_000, record_energy=True)
        e = res.energy
        assert e.min() > 0
        assert (e.max() - e.min()) / e.mean() < 1e-10

    def test_pml_energy_decays_monotonically(self):
        m = uniform_map(100, 90)
        st = fdtd.init(m, pml_cells=10, check_every=100)
        f0, df = vacuum_source()
        src = fdtd.SourceSpec(j=45, i=50, f0=f0, df=df)
        st.add_source(src)
        fdtd.run(st, src.t_off + 10)
        res = fdtd.run(st, 4000, record_energy=True)
        e = res.energy
        # monotone until the box is drained to the numerical floor (the
        # functional excludes PML memory, which trickles back at ~1e-8 U0)
        live = e > 1e-8 * e[0]
        assert np.all(np.diff(e[live]) <= 1e-12 * e[live][:-1])
        assert e[-1] < 1e-6 * e[0]

    def test_linearity(self):
        def run_amp(amp):
            m = uniform_map(120, 90)
            st = fdtd.init(m, pml_cells=10)
            f0, df = vacuum_source()
            st.add_source(fdtd.SourceSpec(j=45, i=60, f0=f0, df=df, amplitude=amp))
            p = st.add_probe(50, 80, "hz")
            fdtd.run(st, 2000)
            return p.samples

        s1, s3 = run_amp(1.0), run_amp(3.0)
        scale = np.abs(s1).max()
        assert np.abs(s3 - 3.0 * s1).max() <= 1e-12 * 3.0 * scale
        s_neg = run_amp(-1.0)
        assert np.array_equal(s_neg, -s1)

    def test_mirror_symmetric_probes_agree(self):
        # symmetric dielectric blocks, centered source, mirrored probe pairs
        nx, ny, dx = 121, 81, 20.0
        eps = np.ones((ny, nx))
        eps[30:51, 20:41] = 8.41
        eps[30:51, 80:101] = 8.41   # mirror image about the center column
        m = geometry.DielectricMap(nx=nx, ny=ny, dx=dx, eps=eps,
                                   origin=(-(nx - 1) / 2 * dx, -(ny - 1) / 2 * dx),
                                   eps_background=1.0)
        st = fdtd.init(m, pml_cells=10)
        f0, df = vacuum_source()
        st.add_source(fdtd.SourceSpec(j=40, i=60, f0=f0, df=df))
        p_left = st.add_probe(40, 60 - 17, "hz")
        p_right = st.add_probe(40, 60 + 17, "hz")
        fdtd.run(st, 3000)
        scale = np.abs(p_left.samples).max()
        assert np.abs(p_left.samples - p_right.samples).max() <= 1e-10 * scale

    def test_courant_violation_triggers_instability(self):
        m = uniform_map(80, 70)
        st = fdtd.init(m, S=1.05, pml_cells=10, enforce_courant=False,
                       check_every=10)
        f0, df = vacuum_source()
        st.add_source(fdtd.SourceSpec(j=35, i=40, f0=f0, df=df))
        with pytest.raises(InstabilityError) as err:
            fdtd.run(st, 1000)
        assert err.value.step < 1000

    def test_stable_at_courant_limit(self):
        m = uniform_map(50, 40)
        st = fdtd.init(m, S=1.0, pml_cells=0, check_every=1000)
        f0, df = vacuum_source()
        st.add_source(fdtd.SourceSpec(j=20, i=25, f0=f0, df=df))
        fdtd.run(st, 100_000)
        assert np.all(np.isfinite(st.hz))

    def test_deterministic_reruns(self):
        def one():
            m = uniform_map(90, 70)
            st = fdtd.init(m, pml_cells=10)
            f0, df = vacuum_source()
            st.add_source(fdtd.SourceSpec(j=35, i=45, f0=f0, df=df))
            p = st.add_probe(40, 60, "hz")
            fdtd.run(st, 1500)
            return p.samples

        assert np.array_equal(one(), one())


class TestFlux:
    def make_dft_state(self):
        m = uniform_map(151, 151)
        st = fdtd.init(m, pml_cells=10)
        lam = 30 * 20.0e-9
        f0 = C.c / lam
        st.add_source(fdtd.SourceSpec(j=75, i=75, f0=f0, df=f0 / 6))
        st.add_monitor(2 * math.pi * f0)
        fdtd.run(st, 6000)
        return st.fieldmap()

    def test_zero_fields_zero_flux(self):
        m = uniform_map(40, 40)
        st = fdtd.init(m, pml_cells=10)
        st.add_monitor(1e15)
        fdtd.run(st, 5)
        assert fdtd.flux(st.fieldmap(), "x", 20, 5, 35) == 0.0

    def test_symmetric_source_equal_faces(self):
        fm = self.make_dft_state()
        c = 75
        faces = [
            fdtd.flux(fm, "x", c + 40, c - 40, c + 41, +1),
            fdtd.flux(fm, "x", c - 39, c - 40, c + 41, -1),
            fdtd.flux(fm, "y", c + 40, c - 40, c + 41, +1),
            fdtd.flux(fm, "y", c - 39, c - 40, c + 41, -1),
        ]
        faces = np.array(faces)
        assert np.all(faces > 0)
        assert (faces.max() - faces.min()) / faces.mean() < 0.01

    def test_source_free_box_nets_zero(self):
        fm = self.make_dft_state()
        net = fdtd.flux_box(fm, 20, 50, 20, 50)
        one_face = abs(fdtd.flux(fm, "x", 50, 20, 50, +1))
        assert abs(net) < 1e-3 * one_face

    def test_segment_outside_grid_rejected(self):
        fm = self.make_dft_state()
        with pytest.raises(ParameterError):
            fdtd.flux(fm, "x", 0, 5, 30)
        with pytest.raises(ParameterError):
            fdtd.flux(fm, "y", 10, 5, 9999)


class TestSourceSpec:
    def test_too_short_cutoff_rejected(self):
        m = uniform_map(60, 50)
        st = fdtd.init(m)
        f0, df = vacuum_source()
        src = fdtd.SourceSpec(j=25, i=30, f0=f0, df=df, t_off=10)
        with pytest.raises(ParameterError):
            st.add_source(src)

    def test_waveform_fully_decayed_at_cutoff(self):
        m = uniform_map(60, 50)
        st = fdtd.init(m)
        f0, df = vacuum_source()
        src = st.add_source(fdtd.SourceSpec(j=25, i=30, f0=f0, df=df))
        t = np.array([0.0, src.t_off_time - st.dt, src.t_off_time + st.dt])
        w = src.waveform(t)
        assert abs(w[0]) < 1e-7
        assert abs(w[1]) < 1e-7
        assert w[2] == 0.0


class TestGridConvergence:
    @staticmethod
    def block_cavity(dx):
        L = 1600.0
        n = int(round(L / dx))
        eps = np.ones((n, n))
        centers = (np.arange(n) + 0.5 - n / 2) * dx
        X, Y = np.meshgrid(centers, centers)
        eps[(np.abs(X) < 400) & (np.abs(Y) < 400)] = 8.41
        return geometry.DielectricMap(nx=n, ny=n, dx=dx, eps=eps,
                                      origin=(centers[0], centers[0]),
                                      eps_background=1.0)

    def resonance(self, dx, steps):
        from modegap import modal
        m = self.block_cavity(dx)
        st = fdtd.init(m, pml_cells=0)
        f0 = C.c / 3500e-9
        src = fdtd.SourceSpec(j=m.ny // 2, i=m.nx // 2 - int(100 / dx),
                              f0=f0, df=f0 / 3)
        st.add_source(src)
        probe = st.add_probe(m.ny // 2 + int(150 / dx), m.nx // 2 + int(100 / dx), "hz")
        fdtd.run(st, src.t_off + steps)
        return modal.resonance_scan(probe.series(st.dt), src.t_off)[0][0]

    def test_resonance_converges_on_refinement(self):
        e_coarse = self.resonance(25.0, 6000)
        e_fine = self.resonance(12.5, 12000)
        assert abs(e_fine - e_coarse) / e_fine < 0.005
