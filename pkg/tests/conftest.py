import hypothesis
import numpy as np
import pytest

from modegap import fdtd, geometry

hypothesis.settings.register_profile("ci", max_examples=60, deadline=None)
hypothesis.settings.load_profile("ci")


def uniform_map(nx: int, ny: int, dx: float = 20.0, eps: float = 1.0) -> geometry.DielectricMap:
    """Uniform-permittivity map centered on the origin."""
    arr = np.full((ny, nx), float(eps))
    return geometry.DielectricMap(
        nx=nx, ny=ny, dx=dx, eps=arr,
        origin=(-(nx - 1) / 2 * dx, -(ny - 1) / 2 * dx), eps_background=float(eps))


@pytest.fixture(scope="session")
def default_cavity_map() -> geometry.DielectricMap:
    """The desk-scale default cavity rasterized at dx = a/20."""
    spec = geometry.LatticeSpec()
    holes = geometry.apply_cavity_shifts(
        geometry.build_lattice(spec), geometry.CavitySpec(), spec)
    eps_bg = geometry.effective_index(3.46, 1.0, 180.0, 968.6) ** 2
    return geometry.rasterize(holes, spec.a / 20.0, eps_bg, 2.0 * spec.a)


@pytest.fixture(scope="session")
def default_cavity_run(default_cavity_map):
    """One full scan + ringdown of the default cavity, shared by the FDTD
    property tests and the acceptance suite (several minutes of compute)."""
    from modegap import modal
    from scipy import constants as C

    dmap = default_cavity_map
    a_nm = 250.0
    iy0 = int(round((0.0 - dmap.origin[1]) / dmap.dx))
    ix0 = int(round((0.0 - dmap.origin[0]) / dmap.dx))

    # broadband discovery
    st = fdtd.init(dmap, S=0.5, pml_cells=10)
    f_scan = 0.26 * C.c / (a_nm * 1e-9)
    src = fdtd.SourceSpec(j=iy0, i=ix0, f0=f_scan, df=0.12 * f_scan)
    st.add_source(src)
    probe = st.add_probe(iy0 + 4, ix0 + 3, "hz")
    fdtd.run(st, 30000)
    period = max(int(round(1.0 / (f_scan * st.dt))), 1)
    scan_peaks = modal.resonance_scan(probe.series(st.dt), src.t_off + 40 * period)
    f0 = modal.freq_from_energy_ev(scan_peaks[0][0])

    # narrowband ringdown with DFT over the decay
    st = fdtd.init(dmap, S=0.5, pml_cells=10)
    src = fdtd.SourceSpec(j=iy0, i=ix0, f0=f0, df=0.003 * f0)
    st.add_source(src)
    probe = st.add_probe(iy0 + 4, ix0 + 3, "hz")
    fdtd.run(st, src.t_off)
    st.add_monitor(2.0 * np.pi * f0)
    fdtd.run(st, 45000)

    period = max(int(round(1.0 / (f0 * st.dt))), 1)
    return {
        "map": dmap,
        "state": st,
        "series": probe.series(st.dt),
        "t_min": src.t_off + 20 * period,
        "scan_peaks": scan_peaks,
        "fieldmap": st.fieldmap(),
        "center_cell": (iy0, ix0),
    }
