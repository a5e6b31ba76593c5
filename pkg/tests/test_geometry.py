import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from modegap import geometry
from modegap.errors import ParameterError, ResolutionError

SQRT3 = math.sqrt(3.0)


def lattice(**kw):
    defaults = dict(a=250.0, r=70.0, n_rows=7, n_cols=25, w_factor=0.98)
    defaults.update(kw)
    return geometry.LatticeSpec(**defaults)


class TestBuildLattice:
    def test_single_ring_three_columns(self):
        hs = geometry.build_lattice(lattice(n_rows=1, n_cols=3, w_factor=1.0))
        assert len(hs) == 6
        ys = np.unique(np.round(hs.holes[:, 1], 6))
        assert ys == pytest.approx([-SQRT3 * 250 / 2, SQRT3 * 250 / 2], abs=1e-3)

    def test_paper_waveguide_width(self):
        hs = geometry.build_lattice(lattice(n_rows=1, n_cols=3))
        y_inner = np.abs(hs.holes[:, 1]).min()
        assert y_inner == pytest.approx(0.98 * SQRT3 * 250 / 2, abs=1e-3)
        assert y_inner == pytest.approx(212.176, abs=1e-3)

    def test_within_row_spacing_exact(self):
        hs = geometry.build_lattice(lattice(n_rows=4, n_cols=11))
        for y in np.unique(hs.holes[:, 1]):
            xs = np.sort(hs.holes[hs.holes[:, 1] == y, 0])
            gaps = np.diff(xs)
            assert gaps == pytest.approx(np.full(gaps.shape, 250.0), abs=1e-9)

    def test_row_spacing(self):
        hs = geometry.build_lattice(lattice(n_rows=3, n_cols=9, w_factor=1.0))
        ys = np.unique(hs.holes[:, 1])
        upper = np.sort(ys[ys > 0])
        assert np.diff(upper) == pytest.approx(upper[0] * 0 + SQRT3 * 250 / 2, abs=1e-9)

    def test_hole_count_matches_helper(self):
        spec = lattice(n_rows=6, n_cols=13)
        assert len(geometry.build_lattice(spec)) == geometry.hole_count(spec)

    @given(st.integers(1, 8), st.sampled_from([3, 9, 15, 25]),
           st.floats(0.6, 1.4))
    @settings(max_examples=30)
    def test_mirror_symmetry(self, n_rows, n_cols, w_factor):
        hs = geometry.build_lattice(lattice(n_rows=n_rows, n_cols=n_cols,
                                            w_factor=w_factor))
        for axis in ("x", "y"):
            mirrored = np.sort(hs.mirrored(axis).holes, axis=0)
            assert np.allclose(mirrored, np.sort(hs.holes, axis=0), atol=1e-9)

    @pytest.mark.parametrize("bad", [
        dict(a=-1.0), dict(r=0.0), dict(r=130.0), dict(n_rows=0),
        dict(n_cols=4), dict(w_factor=0.4), dict(w_factor=1.6),
    ])
    def test_invalid_specs_rejected(self, bad):
        with pytest.raises(ParameterError):
            geometry.build_lattice(lattice(**bad))


class TestCavityShifts:
    def test_zero_shift_is_identity(self):
        spec = lattice()
        hs = geometry.build_lattice(spec)
        out = geometry.apply_cavity_shifts(
            hs, geometry.CavitySpec(shift_tiers=(0.0, 0.0, 0.0)), spec)
        assert np.array_equal(out.holes, hs.holes)

    def test_default_tiers_displace_twelve_holes(self):
        spec = lattice()
        hs = geometry.build_lattice(spec)
        out = geometry.apply_cavity_shifts(hs, geometry.CavitySpec(), spec)
        audit = geometry.shift_audit(hs, out)
        assert audit["n_displaced"] == 12
        assert audit["total_displacement_nm"] == pytest.approx(48.0, abs=1e-9)
        w_half = 0.98 * SQRT3 * 250 / 2
        inner = np.abs(out.holes[:, 1])
        assert np.isclose(inner, w_half + 6.0, atol=1e-6).sum() == 4
        assert inner.max() >= w_half

    def test_innermost_tier_position(self):
        spec = lattice()
        hs = geometry.build_lattice(spec)
        out = geometry.apply_cavity_shifts(hs, geometry.CavitySpec(), spec)
        moved = np.abs(out.holes[:, 1] - hs.holes[:, 1]) > 1e-12
        displaced = out.holes[moved]
        tier0 = displaced[np.isclose(np.abs(displaced[:, 0]), 250.0)]
        assert np.abs(tier0[:, 1]) == pytest.approx(218.176, abs=1e-3)

    def test_mirror_symmetry_preserved(self):
        spec = lattice()
        out = geometry.apply_cavity_shifts(
            geometry.build_lattice(spec), geometry.CavitySpec(), spec)
        for axis in ("x", "y"):
            mirrored = np.sort(out.mirrored(axis).holes, axis=0)
            assert np.allclose(mirrored, np.sort(out.holes, axis=0), atol=1e-9)

    def test_tiers_exceeding_lattice_rejected(self):
        spec = lattice(n_cols=5)
        hs = geometry.build_lattice(spec)
        with pytest.raises(ParameterError):
            geometry.apply_cavity_shifts(hs, geometry.CavitySpec(), spec)

    def test_increasing_tiers_rejected(self):
        with pytest.raises(ParameterError):
            geometry.CavitySpec(shift_tiers=(2.0, 4.0, 6.0)).validate(250.0)

    def test_huge_shift_rejected(self):
        with pytest.raises(ParameterError):
            geometry.CavitySpec(shift_tiers=(30.0,)).validate(250.0)


class TestRasterize:
    def small_set(self):
        spec = lattice(n_rows=2, n_cols=5)
        return geometry.build_lattice(spec)

    def test_cell_inside_hole_is_air(self):
        hs = geometry.HoleSet(np.array([[0.0, 0.0, 200.0]]))
        m = geometry.rasterize(hs, 10.0, 8.41, pad=820.0)
        iy = int(round((0 - m.origin[1]) / m.dx))
        ix = int(round((0 - m.origin[0]) / m.dx))
        assert m.eps[iy, ix] == 1.0

    def test_background_cell(self):
        hs = geometry.HoleSet(np.array([[0.0, 0.0, 50.0]]))
        m = geometry.rasterize(hs, 5.0, 8.41, pad=210.0)
        assert m.eps[0, 0] == 8.41
        assert m.eps.max() == 8.41
        assert m.eps.min() >= 1.0

    def test_half_covered_cell(self):
        # big hole: its rim is locally a straight edge through the cell center
        # (sagitta over one cell ~ 0.0025 nm, far below the subsample pitch)
        r = 5000.0
        hs = geometry.HoleSet(np.array([[0.0, -r, r]]))  # edge along y ~ 0
        # pad chosen so ny is odd and a cell center falls exactly on the edge
        m = geometry.rasterize(hs, 10.0, 8.41, pad=205.0, min_feature=100.0)
        assert m.ny % 2 == 1
        iy = int(round((0.0 - m.origin[1]) / m.dx))
        ix = int(round((0.0 - m.origin[0]) / m.dx))
        # cell centered on the edge: half covered up to subsample quantization
        got = m.eps[iy, ix]
        assert abs(got - (1 + 8.41) / 2) <= (8.41 - 1) / 16 + 1e-9

    def test_mirror_flip_bit_exact(self):
        spec = lattice(n_rows=2, n_cols=5)
        hs = geometry.apply_cavity_shifts(
            geometry.build_lattice(spec), geometry.CavitySpec(shift_tiers=(6.0,)), spec)
        m = geometry.rasterize(hs, 12.5, 8.41, pad=500.0)
        mx = geometry.rasterize(hs.mirrored("x"), 12.5, 8.41, pad=500.0)
        my = geometry.rasterize(hs.mirrored("y"), 12.5, 8.41, pad=500.0)
        assert np.array_equal(mx.eps, m.eps[:, ::-1])
        assert np.array_equal(my.eps, m.eps[::-1, :])

    def test_refinement_changes_area_below_one_percent(self):
        hs = self.small_set()
        area = {}
        for dx in (25.0, 12.5):
            m = geometry.rasterize(hs, dx, 8.41, pad=500.0)
            area[dx] = float(np.sum(m.eps - 1.0)) * dx ** 2
        assert area[12.5] == pytest.approx(area[25.0], rel=0.01)

    def test_coarse_grid_rejected(self):
        with pytest.raises(ResolutionError):
            geometry.rasterize(self.small_set(), 26.0, 8.41, pad=500.0)

    def test_small_pad_rejected(self):
        with pytest.raises(ParameterError):
            geometry.rasterize(self.small_set(), 12.5, 8.41, pad=100.0)


class TestEffectiveIndex:
    def residual(self, ne, n_core, n_clad, d, lam):
        k0 = 2 * math.pi / lam
        kap = k0 * math.sqrt(max(n_core ** 2 - ne ** 2, 0.0))
        gam = k0 * math.sqrt(max(ne ** 2 - n_clad ** 2, 0.0))
        return math.tan(kap * d / 2) - gam / kap

    def test_cutoff_limit(self):
        ne = geometry.effective_index(1.0 + 1e-12, 1.0, 180.0, 968.6)
        assert ne == pytest.approx(1.0, abs=1e-6)

    def test_thick_slab_limit(self):
        ne = geometry.effective_index(3.46, 1.0, 100 * 968.6, 968.6)
        assert ne == pytest.approx(3.46, abs=1e-3)

    def test_gaas_slab_against_root_scan(self):
        # oracle: dense scan of the dispersion residual, decreasing sign change
        args = (3.46, 1.0, 180.0, 968.6)
        grid = np.linspace(1.0 + 1e-9, 3.46 - 1e-9, 1_000_001)
        vals = np.array([self.residual(x, *args) for x in grid])
        flips = np.nonzero((vals[:-1] > 0) & (vals[1:] < 0))[0]
        assert flips.size == 1
        root = 0.5 * (grid[flips[0]] + grid[flips[0] + 1])
        ne = geometry.effective_index(*args)
        assert ne == pytest.approx(root, abs=5e-6)
        assert 1.0 < ne < 3.46

    def test_monotone_in_thickness_and_core_index(self):
        thick = [80.0, 140.0, 200.0, 400.0]
        ne_t = [geometry.effective_index(3.46, 1.0, d, 968.6) for d in thick]
        assert np.all(np.diff(ne_t) > 0)
        cores = [2.0, 2.5, 3.0, 3.46]
        ne_c = [geometry.effective_index(n, 1.0, 180.0, 968.6) for n in cores]
        assert np.all(np.diff(ne_c) > 0)

    def test_invalid_inputs(self):
        with pytest.raises(ParameterError):
            geometry.effective_index(1.0, 1.0, 180.0, 968.6)
        with pytest.raises(ParameterError):
            geometry.effective_index(3.46, 1.0, -5.0, 968.6)
