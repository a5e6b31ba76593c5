"""Resonance extraction from FDTD outputs: energy, Q and mode volume.

Q comes from the ringdown envelope (per-period RMS, linear fit of
ln(envelope^2) against time) or from the flux balance Q = omega0*U/P.
Energies are reported in eV throughout (E = h*f / e).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import constants as _const

from .errors import (DecayFitError, FluxSignError, MultimodeError,
                     NoResonanceError, ParameterError)
from .fdtd import FieldMap, TimeSeries
from .geometry import DielectricMap

Q_CAP = 1e9
_EV = _const.e
_HBAR = _const.hbar
HC_EV_NM = _const.h * _const.c / _const.e * 1e9


@dataclass
class ModeCharacterization:
    """Resonance summary consumed by the cavity-QED model."""

    E0: float                   # resonance energy, eV
    Q: float
    V_um3: float
    V_lambda_n3: float          # V in units of (lambda0/n)^3
    q_method: str = "decay"
    height_eff_nm: float = 180.0
    r_squared: float | None = None
    q_is_lower_bound: bool = False
    confined: bool = True

    def __post_init__(self):
        if self.E0 <= 0 or self.Q <= 0:
            raise ParameterError("E0 and Q must be positive")
        if self.V_um3 <= 0:
            raise ParameterError("mode volume must be positive")

    def to_dict(self) -> dict:
        return {
            "E0_eV": self.E0,
            "Q": self.Q,
            "q_method": self.q_method,
            "V_um3": self.V_um3,
            "V_lambda_n3": self.V_lambda_n3,
            "height_eff_nm": self.height_eff_nm,
        }


def energy_ev_from_freq(f_hz: float) -> float:
    return _const.h * f_hz / _EV


def freq_from_energy_ev(E0: float) -> float:
    return E0 * _EV / _const.h


def resonance_scan(series: TimeSeries, t_min: int, pad_factor: int = 8,
                   floor_ratio: float = 10.0) -> list[tuple[float, float]]:
    """Peak energies (eV) and amplitudes of the post-source periodogram.

    Zero-pads the analysis window by at least pad_factor, picks local maxima
    above floor_ratio times the median floor and refines each with a 3-point
    parabola.  Sorted by amplitude, strongest first.
    """
    w = series.samples[t_min:]
    if w.size < 2048:
        raise ParameterError("analysis window must hold >= 2048 samples after t_min")
    n_fft = 1 << int(math.ceil(math.log2(w.size * pad_factor)))
    spec = np.abs(np.fft.rfft(w, n=n_fft))
    freqs = np.fft.rfftfreq(n_fft, d=series.dt)
    floor = float(np.median(spec))
    thresh = floor_ratio * floor

    interior = (spec[1:-1] > spec[:-2]) & (spec[1:-1] >= spec[2:]) & (spec[1:-1] > thresh)
    idx = np.nonzero(interior)[0] + 1
    if idx.size == 0:
        raise NoResonanceError("no spectral peak above 10x the median floor")

    peaks = []
    for k in idx:
        ym, y0, yp = spec[k - 1], spec[k], spec[k + 1]
        denom = (ym - 2.0 * y0 + yp)
        delta = 0.5 * (ym - yp) / denom if denom != 0.0 else 0.0
        delta = float(np.clip(delta, -0.5, 0.5))
        f = (k + delta) / (n_fft * series.dt)
        amp = y0 - 0.25 * (ym - yp) * delta
        peaks.append((energy_ev_from_freq(f), float(amp)))
    peaks.sort(key=lambda p: -p[1])
    return peaks


@dataclass
class DecayFit:
    Q: float
    r_squared: float
    slope: float                # d ln(envelope^2) / dt, 1/s
    is_lower_bound: bool = False


def q_from_decay(series: TimeSeries, E0: float, t_min: int,
                 monotone_tol: float = 0.05, r2_min: float = 0.99,
                 q_cap: float = Q_CAP) -> DecayFit:
    """Quality factor from the ringdown envelope after step t_min.

    The envelope is the per-period RMS (window = one optical period at E0);
    Q = -omega0 / slope of the ln(envelope^2) linear fit.  A non-monotone
    envelope means beating between modes and raises MultimodeError; an
    undamped signal is reported as a lower bound at q_cap.
    """
    omega0 = E0 * _EV / _HBAR
    w = series.samples[t_min:]
    period = 2.0 * math.pi / omega0
    n_per = int(round(period / series.dt))
    if n_per < 4:
        raise ParameterError("fewer than 4 samples per optical period")
    n_blocks = w.size // n_per
    if n_blocks < 8:
        raise ParameterError("post-source window shorter than 8 decay blocks")

    blocks = w[:n_blocks * n_per].reshape(n_blocks, n_per)
    env_sq = np.mean(blocks * blocks, axis=1)
    if np.any(env_sq <= 0.0):
        raise DecayFitError("envelope vanishes inside the analysis window")
    rises = np.diff(env_sq) > monotone_tol * env_sq[:-1]
    if np.any(rises):
        raise MultimodeError(
            "non-monotone ringdown envelope (beating): narrow the source bandwidth")

    t = (np.arange(n_blocks) + 0.5) * n_per * series.dt
    y = np.log(env_sq)
    slope, intercept = np.polyfit(t, y, 1)
    resid = y - (slope * t + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 0.0

    if slope >= 0.0 or -omega0 / slope > q_cap:
        return DecayFit(Q=q_cap, r_squared=r2, slope=float(slope), is_lower_bound=True)
    q = -omega0 / slope
    if r2 < r2_min:
        raise DecayFitError(f"ringdown fit r^2 = {r2:.4f} below {r2_min}")
    return DecayFit(Q=float(q), r_squared=float(r2), slope=float(slope))


def q_from_flux(U: float, P: float, E0: float) -> float:
    """Q = omega0 * U / P from stored energy and leaked power."""
    if U <= 0:
        raise ParameterError("stored energy must be positive")
    if P <= 0:
        raise FluxSignError("non-positive outward flux: box too small or inside the PML")
    omega0 = E0 * _EV / _HBAR
    return omega0 * U / P


@dataclass
class ModeVolume:
    V_um3: float
    V_lambda_n3: float
    V2D_nm2: float
    peak_cell: tuple[int, int]  # (iy, ix) of the energy-density maximum
    confined: bool


def energy_density(field: FieldMap, eps: DielectricMap) -> np.ndarray:
    """Cell-centered electric energy density eps*|E|^2 (arbitrary units)."""
    excc, eycc = field.e_center()
    return eps.eps * (np.abs(excc) ** 2 + np.abs(eycc) ** 2)


def volume_from_density(dens: np.ndarray, dx: float, height_eff: float,
                        E0: float, n: float) -> ModeVolume:
    """Purcell-convention volume of a cell-centered energy-density map.

    V2D = sum(dens) dx^2 / max(dens); V = V2D * height_eff, reported in um^3
    and in units of (lambda0/n)^3 with lambda0 = hc/E0.  Warns (and flags)
    when the maximum sits on the grid boundary.
    """
    if height_eff <= 0 or E0 <= 0 or n <= 0:
        raise ParameterError("height_eff, E0 and n must be positive")
    dens = np.asarray(dens, dtype=float)
    peak = float(dens.max())
    if peak <= 0.0:
        raise ParameterError("field map is identically zero")
    ny, nx = dens.shape
    iy, ix = np.unravel_index(int(np.argmax(dens)), dens.shape)
    confined = 0 < iy < ny - 1 and 0 < ix < nx - 1
    if not confined:
        warnings.warn("energy-density maximum on the grid boundary: mode not confined",
                      stacklevel=2)
    v2d_nm2 = float(dens.sum()) / peak * dx ** 2
    v_nm3 = v2d_nm2 * height_eff
    lam_n = (HC_EV_NM / E0) / n
    return ModeVolume(V_um3=v_nm3 * 1e-9, V_lambda_n3=v_nm3 / lam_n ** 3,
                      V2D_nm2=v2d_nm2, peak_cell=(int(iy), int(ix)),
                      confined=confined)


def mode_volume(field: FieldMap, eps: DielectricMap, height_eff: float,
                E0: float, n: float) -> ModeVolume:
    """Purcell-convention mode volume of the DFT field map."""
    return volume_from_density(energy_density(field, eps), eps.dx,
                               height_eff, E0, n)


def make_decay_series(E0: float, Q: float, dt: float, n_samples: int,
                      amplitude: float = 1.0, phase: float = 0.0) -> TimeSeries:
    """Synthetic single-mode ringdown s(t) = A exp(-w0 t / 2Q) cos(w0 t + p)."""
    omega0 = E0 * _EV / _HBAR
    t = np.arange(n_samples) * dt
    s = amplitude * np.exp(-omega0 * t / (2.0 * Q)) * np.cos(omega0 * t + phase)
    return TimeSeries(dt=dt, samples=s)
