"""2D FDTD Maxwell solver, TE polarization (in-plane E, out-of-plane H).

The simulation owns three staggered Yee arrays plus CPML absorbers
(polynomial grading, order 3, target reflection 1e-8).  Units are SI: the
grid pitch of the driving DielectricMap is given in nm and converted here.

Time staggering: hz lives at (n + 1/2) dt, ex/ey at (n + 1) dt after step n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import constants as _const

from . import _kernels
from .errors import FluxSignError, InstabilityError, ParameterError
from .geometry import DielectricMap

C0 = _const.c
EPS0 = _const.epsilon_0
MU0 = _const.mu_0

FIELD_LIMIT = 1e30
PML_GRADE_ORDER = 3
PML_TARGET_REFLECTION = 1e-8

_COMPONENTS = {"hz": 0, "ex": 1, "ey": 2}


@dataclass
class SourceSpec:
    """Gaussian-modulated sinusoid injected additively at one cell.

    The envelope std is tau = 1/(2*pi*df); the pulse peaks at t_off/2 and is
    cut to exactly zero at t_off steps (amplitude ~1e-8 of peak by then).
    """

    j: int
    i: int
    component: str = "hz"
    f0: float = 3e14           # center frequency, Hz
    df: float = 3e13           # bandwidth parameter, Hz
    t_off: int = 0             # cutoff step; 0 -> minimal decayed length
    amplitude: float = 1.0

    def validate(self, dt: float) -> None:
        if self.component not in _COMPONENTS:
            raise ParameterError(f"unknown source component {self.component!r}")
        if self.f0 <= 0 or self.df <= 0:
            raise ParameterError("source f0 and df must be positive")
        if self.t_off * dt < 6.0 / (math.pi * self.df) - 1e-12 * dt:
            raise ParameterError(
                f"t_off must be >= {self.minimal_t_off(dt)} steps "
                "(6/(pi*df)) so the pulse has fully decayed")

    def minimal_t_off(self, dt: float) -> int:
        return int(math.ceil(6.0 / (math.pi * self.df) / dt))

    def waveform(self, t: np.ndarray) -> np.ndarray:
        tau = 1.0 / (2.0 * math.pi * self.df)
        t0 = 0.5 * self.t_off_time
        w = self.amplitude * np.exp(-((t - t0) ** 2) / (2.0 * tau * tau)) \
            * np.sin(2.0 * math.pi * self.f0 * (t - t0))
        w[t >= self.t_off_time] = 0.0
        return w

    @property
    def t_off_time(self) -> float:
        # set by SimState.add_source once dt is known
        return self._t_off_time

    def _bind(self, dt: float) -> None:
        if self.t_off == 0:
            self.t_off = self.minimal_t_off(dt)
        self.validate(dt)
        self._t_off_time = self.t_off * dt


@dataclass
class TimeSeries:
    """Uniformly sampled probe record."""

    dt: float                  # s
    samples: np.ndarray
    start_step: int = 0

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 1:
            raise ParameterError("samples must be one-dimensional")
        if self.samples.size and not np.all(np.isfinite(self.samples)):
            raise ParameterError("samples must be finite")

    @property
    def times(self) -> np.ndarray:
        return (self.start_step + np.arange(self.samples.size)) * self.dt


@dataclass
class Probe:
    j: int
    i: int
    component: str = "hz"
    start_step: int = 0
    _chunks: list = field(default_factory=list, repr=False)

    @property
    def samples(self) -> np.ndarray:
        if not self._chunks:
            return np.empty(0)
        return np.concatenate(self._chunks)

    def series(self, dt: float) -> TimeSeries:
        return TimeSeries(dt=dt, samples=self.samples, start_step=self.start_step)


@dataclass
class FieldMap:
    """Complex field amplitudes at one angular frequency (running DFT)."""

    omega: float               # rad/s
    dx: float                  # nm (grid pitch, matches the DielectricMap)
    origin: tuple[float, float]
    hz: np.ndarray             # complex, (ny, nx)
    ex: np.ndarray             # complex, (ny+1, nx)
    ey: np.ndarray             # complex, (ny, nx+1)
    n_steps: int               # accumulation length
    norm: float                # multiplier already applied (the dt factor)

    @property
    def shape(self) -> tuple[int, int]:
        return self.hz.shape

    def e_center(self) -> tuple[np.ndarray, np.ndarray]:
        """Ex, Ey interpolated to cell centers."""
        excc = 0.5 * (self.ex[:-1, :] + self.ex[1:, :])
        eycc = 0.5 * (self.ey[:, :-1] + self.ey[:, 1:])
        return excc, eycc


class _DftMonitor:
    def __init__(self, omega: float, ny: int, nx: int):
        self.omega = float(omega)
        self.n_steps = 0
        self.hz_re = np.zeros((ny, nx))
        self.hz_im = np.zeros((ny, nx))
        self.ex_re = np.zeros((ny + 1, nx))
        self.ex_im = np.zeros((ny + 1, nx))
        self.ey_re = np.zeros((ny, nx + 1))
        self.ey_im = np.zeros((ny, nx + 1))


@dataclass
class RunResult:
    steps: int
    energy: np.ndarray | None = None


def material_arrays(eps: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Permittivity averaged onto the staggered Ex and Ey positions."""
    ny, nx = eps.shape
    epsxx = np.empty((ny + 1, nx))
    epsxx[1:-1, :] = 0.5 * (eps[:-1, :] + eps[1:, :])
    epsxx[0, :] = eps[0, :]
    epsxx[-1, :] = eps[-1, :]
    epsyy = np.empty((ny, nx + 1))
    epsyy[:, 1:-1] = 0.5 * (eps[:, :-1] + eps[:, 1:])
    epsyy[:, 0] = eps[:, 0]
    epsyy[:, -1] = eps[:, -1]
    return epsxx, epsyy


class SimState:
    """Owns the Yee fields, the material/PML coefficient arrays and the
    attached sources, probes and DFT monitor for one simulation."""

    def __init__(self, eps_map: DielectricMap, S: float, pml_cells: int,
                 check_every: int = 10):
        self.eps_map = eps_map
        self.S = float(S)
        self.pml_cells = int(pml_cells)
        self.check_every = int(check_every)
        ny, nx = eps_map.ny, eps_map.nx
        self.nx, self.ny = nx, ny
        self.dx_m = eps_map.dx * 1e-9
        self.dt = self.S * self.dx_m / (C0 * math.sqrt(2.0))
        self.t = 0

        self.epsxx, self.epsyy = material_arrays(eps_map.eps)

        self.hz = np.zeros((ny, nx))
        self.ex = np.zeros((ny + 1, nx))
        self.ey = np.zeros((ny, nx + 1))
        self.cex = self.dt / (EPS0 * self.epsxx * self.dx_m)
        self.cey = self.dt / (EPS0 * self.epsyy * self.dx_m)
        self.chx = self.dt / (MU0 * self.dx_m)
        self.chy = self.dt / (MU0 * self.dx_m)

        self._build_pml()
        self.sources: list[SourceSpec] = []
        self.probes: list[Probe] = []
        self.monitor: _DftMonitor | None = None

    # -- setup ------------------------------------------------------------
    def _build_pml(self) -> None:
        ny, nx, npml = self.ny, self.nx, self.pml_cells
        # impedance-matched sigma_max against the background at the grid edge
        edge = np.concatenate([self.eps_map.eps[0, :], self.eps_map.eps[-1, :],
                               self.eps_map.eps[:, 0], self.eps_map.eps[:, -1]])
        n_edge = math.sqrt(float(np.median(edge)))

        def profiles(n_pos: int, staggered: bool):
            b = np.ones(n_pos)
            a = np.zeros(n_pos)
            if npml == 0:
                return b, a
            d_m = npml * self.dx_m
            smax = (-(PML_GRADE_ORDER + 1) * math.log(PML_TARGET_REFLECTION)
                    * EPS0 * C0 / (2.0 * d_m * n_edge))
            off = 0.5 if staggered else 0.0
            # staggered arrays hold one entry per cell, node arrays one per
            # edge; the high-side interface shifts by one accordingly
            hi_edge = (n_pos - npml) if staggered else (n_pos - 1 - npml)
            for k in range(n_pos):
                # depth from the PML inner interface, in cells
                pos = k + off
                d_lo = npml - pos
                d_hi = pos - hi_edge
                depth = max(d_lo, d_hi, 0.0)
                if depth <= 0.0:
                    continue
                u = min(depth / npml, 1.0)
                sigma = smax * u ** PML_GRADE_ORDER
                b[k] = math.exp(-sigma * self.dt / EPS0)
                a[k] = b[k] - 1.0
            return b, a

        # cell-centered positions (hz): indices 0..n-1 at half cells
        self.bhz_x, self.ahz_x = profiles(nx, staggered=True)
        self.bhz_y, self.ahz_y = profiles(ny, staggered=True)
        # node positions (ex along y, ey along x): indices 0..n
        self.bex_y, self.aex_y = profiles(ny + 1, staggered=False)
        self.bey_x, self.aey_x = profiles(nx + 1, staggered=False)

        self.psi_hz_x = np.zeros((ny, nx))
        self.psi_hz_y = np.zeros((ny, nx))
        self.psi_ex_y = np.zeros((ny + 1, nx))
        self.psi_ey_x = np.zeros((ny, nx + 1))

    def add_source(self, src: SourceSpec) -> SourceSpec:
        if not (0 <= src.j < (self.ny + (src.component == "ex"))
                and 0 <= src.i < (self.nx + (src.component == "ey"))):
            raise ParameterError("source position outside grid")
        src._bind(self.dt)
        self.sources.append(src)
        return src

    def add_probe(self, j: int, i: int, component: str = "hz") -> Probe:
        if component not in _COMPONENTS:
            raise ParameterError(f"unknown probe component {component!r}")
        if not (0 <= j < self.hz.shape[0] and 0 <= i < self.hz.shape[1]):
            raise ParameterError("probe position outside grid")
        p = Probe(j=j, i=i, component=component, start_step=self.t)
        self.probes.append(p)
        return p

    def add_monitor(self, omega: float) -> None:
        """Arm (or re-arm) the running DFT at angular frequency omega."""
        self.monitor = _DftMonitor(omega, self.ny, self.nx)

    # -- accessors ---------------------------------------------------------
    def source_off_step(self) -> int:
        return max((s.t_off for s in self.sources), default=0)

    def fieldmap(self) -> FieldMap:
        if self.monitor is None or self.monitor.n_steps == 0:
            raise ParameterError("no DFT monitor accumulated; call add_monitor and run")
        m = self.monitor
        return FieldMap(
            omega=m.omega, dx=self.eps_map.dx, origin=self.eps_map.origin,
            hz=(m.hz_re + 1j * m.hz_im) * self.dt,
            ex=(m.ex_re + 1j * m.ex_im) * self.dt,
            ey=(m.ey_re + 1j * m.ey_im) * self.dt,
            n_steps=m.n_steps, norm=self.dt)

    def field_energy(self) -> float:
        """Instantaneous EM energy (J per unit height); plain (not
        time-centered) H contribution, adequate for diagnostics."""
        dA = self.dx_m ** 2
        ue = 0.5 * EPS0 * (np.sum(self.epsxx * self.ex ** 2)
                           + np.sum(self.epsyy * self.ey ** 2)) * dA
        uh = 0.5 * MU0 * np.sum(self.hz ** 2) * dA
        return float(ue + uh)


def init(eps_map: DielectricMap, S: float = 0.5, pml_cells: int = 10,
         check_every: int = 10, enforce_courant: bool = True) -> SimState:
    """Fresh simulation state for a permittivity map.

    pml_cells = 0 gives a closed, perfectly reflecting (PEC) box; otherwise
    at least 8 cells are required for the absorber to meet its reflection
    target.  enforce_courant=False skips the S <= 1 check (stability-study
    hook; such runs will trip the instability guard).
    """
    if enforce_courant and not 0 < S <= 1:
        raise ParameterError(f"Courant factor S = {S} violates S <= 1")
    if S <= 0:
        raise ParameterError("Courant factor must be positive")
    if pml_cells != 0 and pml_cells < 8:
        raise ParameterError("pml_cells must be 0 (closed box) or >= 8")
    if min(eps_map.nx, eps_map.ny) <= 2 * pml_cells + 4:
        raise ParameterError("grid too small for the requested PML")
    return SimState(eps_map, S=S, pml_cells=pml_cells, check_every=check_every)


def step(state: SimState) -> SimState:
    """Advance a single time step (thin wrapper over run)."""
    run(state, 1)
    return state


def run(state: SimState, n_steps: int, record_energy: bool = False) -> RunResult:
    """Advance n_steps; probes and the DFT monitor accumulate in place.

    Raises InstabilityError when any |hz| exceeds the field limit (checked
    every state.check_every steps).
    """
    if n_steps <= 0:
        raise ParameterError("n_steps must be positive")
    n_src = len(state.sources)
    src_j = np.array([s.j for s in state.sources], dtype=np.int64).reshape(n_src)
    src_i = np.array([s.i for s in state.sources], dtype=np.int64).reshape(n_src)
    src_comp = np.array([_COMPONENTS[s.component] for s in state.sources],
                        dtype=np.int64).reshape(n_src)
    src_wave = np.zeros((n_src, n_steps))
    for k, s in enumerate(state.sources):
        off = 0.5 if s.component == "hz" else 1.0
        t = (state.t + np.arange(n_steps) + off) * state.dt
        src_wave[k] = s.waveform(t)

    n_probe = len(state.probes)
    probe_j = np.array([p.j for p in state.probes], dtype=np.int64).reshape(n_probe)
    probe_i = np.array([p.i for p in state.probes], dtype=np.int64).reshape(n_probe)
    probe_comp = np.array([_COMPONENTS[p.component] for p in state.probes],
                          dtype=np.int64).reshape(n_probe)
    probe_out = np.zeros((n_probe, n_steps))

    mon = state.monitor
    dft_on = mon is not None
    _z2 = np.zeros((0, 0))
    energy_out = np.zeros(n_steps if record_energy else 0)
    hz_prev = np.zeros_like(state.hz) if record_energy else _z2
    dA = state.dx_m ** 2

    status = _kernels.run_steps(
        state.hz, state.ex, state.ey, state.cex, state.cey, state.chx, state.chy,
        state.pml_cells, state.pml_cells,
        state.bex_y, state.aex_y, state.bey_x, state.aey_x,
        state.bhz_x, state.ahz_x, state.bhz_y, state.ahz_y,
        state.psi_ex_y, state.psi_ey_x, state.psi_hz_x, state.psi_hz_y,
        src_j, src_i, src_comp, src_wave,
        probe_j, probe_i, probe_comp, probe_out,
        dft_on, mon.omega if dft_on else 0.0, state.dt, state.t,
        mon.hz_re if dft_on else _z2, mon.hz_im if dft_on else _z2,
        mon.ex_re if dft_on else _z2, mon.ex_im if dft_on else _z2,
        mon.ey_re if dft_on else _z2, mon.ey_im if dft_on else _z2,
        record_energy, hz_prev, state.epsxx, state.epsyy,
        0.5 * EPS0 * dA, 0.5 * MU0 * dA, energy_out,
        n_steps, state.check_every, FIELD_LIMIT)

    if status >= 0:
        raise InstabilityError(int(status))
    state.t += n_steps
    if dft_on:
        mon.n_steps += n_steps
    for k, p in enumerate(state.probes):
        p._chunks.append(probe_out[k].copy())
    return RunResult(steps=n_steps, energy=energy_out if record_energy else None)


# -- flux and stored energy from DFT fields --------------------------------

def flux(fmap: FieldMap, axis: str, index: int, lo: int, hi: int,
         normal: int = 1) -> float:
    """Time-averaged Poynting power through an axis-aligned cell-edge line.

    axis='x': vertical line on the Ey node column `index`, spanning cell rows
    lo..hi-1; positive normal points toward +x.  axis='y': horizontal line on
    the Ex node row `index` spanning cell columns lo..hi-1, normal toward +y.
    Returns W per unit height (for the field normalization in fmap).
    """
    ny, nx = fmap.shape
    dl = fmap.dx * 1e-9
    if normal not in (+1, -1):
        raise ParameterError("normal must be +1 or -1")
    if axis == "x":
        if not (1 <= index <= nx - 1) or not (0 <= lo < hi <= ny):
            raise ParameterError("flux segment outside grid")
        ey = fmap.ey[lo:hi, index]
        hz_line = 0.5 * (fmap.hz[lo:hi, index - 1] + fmap.hz[lo:hi, index])
        sx = 0.5 * np.real(ey * np.conj(hz_line))
        return normal * float(np.sum(sx)) * dl
    if axis == "y":
        if not (1 <= index <= ny - 1) or not (0 <= lo < hi <= nx):
            raise ParameterError("flux segment outside grid")
        ex = fmap.ex[index, lo:hi]
        hz_line = 0.5 * (fmap.hz[index - 1, lo:hi] + fmap.hz[index, lo:hi])
        sy = -0.5 * np.real(ex * np.conj(hz_line))
        return normal * float(np.sum(sy)) * dl
    raise ParameterError("axis must be 'x' or 'y'")


def flux_box(fmap: FieldMap, ix0: int, ix1: int, iy0: int, iy1: int) -> float:
    """Net outward Poynting power through the rectangle of cell-edge lines
    x in {ix0, ix1}, y in {iy0, iy1} (cells ix0..ix1-1 x iy0..iy1-1 inside)."""
    if not (ix0 < ix1 and iy0 < iy1):
        raise ParameterError("degenerate flux box")
    p = flux(fmap, "x", ix1, iy0, iy1, normal=+1)
    p += flux(fmap, "x", ix0, iy0, iy1, normal=-1)
    p += flux(fmap, "y", iy1, ix0, ix1, normal=+1)
    p += flux(fmap, "y", iy0, ix0, ix1, normal=-1)
    return p


def stored_energy(fmap: FieldMap, epsxx: np.ndarray, epsyy: np.ndarray) -> float:
    """Cycle-averaged EM energy of the DFT field (J per unit height)."""
    dA = (fmap.dx * 1e-9) ** 2
    ue = 0.25 * EPS0 * (np.sum(epsxx * np.abs(fmap.ex) ** 2)
                        + np.sum(epsyy * np.abs(fmap.ey) ** 2)) * dA
    uh = 0.25 * MU0 * np.sum(np.abs(fmap.hz) ** 2) * dA
    return float(ue + uh)
