"""Photoluminescence spectra: synthesis, Lorentzian fits, anticrossing fits.

A Spectrum is (energy, intensity) samples in eV and arbitrary counts; a
SpectrumSeries indexes spectra by temperature for the anticrossing workflow
(track the two polariton branches across temperature, then fit the coupled
model to the branch positions).
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import brentq
from scipy.signal import find_peaks

from . import cqed
from .errors import (ConfigError, DegenerateFitError, ParameterError,
                     UnidentifiableError)
from .lm import LMResult, levenberg_marquardt


@dataclass
class Spectrum:
    energies: np.ndarray        # eV, strictly ascending, >= 16 samples
    intensities: np.ndarray     # counts, arbitrary units
    temperature: float | None = None

    def __post_init__(self):
        self.energies = np.asarray(self.energies, dtype=float)
        self.intensities = np.asarray(self.intensities, dtype=float)
        if self.energies.shape != self.intensities.shape or self.energies.ndim != 1:
            raise ParameterError("energies and intensities must be equal-length 1D arrays")
        if self.energies.size < 16:
            raise ParameterError("a spectrum needs at least 16 samples")
        if not np.all(np.diff(self.energies) > 0):
            raise ParameterError("energies must be strictly ascending")
        if not np.all(np.isfinite(self.intensities)):
            raise ParameterError("intensities must be finite")

    @property
    def span(self) -> float:
        return float(self.energies[-1] - self.energies[0])

    @property
    def bin_width(self) -> float:
        return float(np.median(np.diff(self.energies)))


@dataclass
class SpectrumSeries:
    spectra: list[Spectrum]

    def __post_init__(self):
        if any(s.temperature is None for s in self.spectra):
            raise ParameterError("every spectrum in a series needs a temperature")
        self.spectra = sorted(self.spectra, key=lambda s: s.temperature)

    @property
    def temperatures(self) -> np.ndarray:
        return np.array([s.temperature for s in self.spectra])


def lorentzian(E, A: float, E0: float, fwhm: float, b: float = 0.0):
    """b + A*(fwhm/2)^2 / ((E-E0)^2 + (fwhm/2)^2): peak b+A at E0."""
    if fwhm <= 0:
        raise ParameterError("fwhm must be positive")
    half_sq = (fwhm / 2.0) ** 2
    E = np.asarray(E, dtype=float)
    return b + A * half_sq / ((E - E0) ** 2 + half_sq)


@dataclass
class LorentzPeak:
    amplitude: float
    center: float               # eV
    fwhm: float                 # eV

    def as_tuple(self) -> tuple[float, float, float]:
        return self.amplitude, self.center, self.fwhm


@dataclass
class PeakFit:
    peaks: list[LorentzPeak]
    baseline: float
    covariance: np.ndarray       # over [b, A1, E1, G1, ...]
    residual_norm: float         # sqrt(sum r^2)
    converged: bool
    n_iter: int
    cost_history: list[float] = field(default_factory=list)

    def model(self, E: np.ndarray) -> np.ndarray:
        out = np.full(np.asarray(E, dtype=float).shape, self.baseline)
        for pk in self.peaks:
            out += lorentzian(E, pk.amplitude, pk.center, pk.fwhm, 0.0)
        return out

    def to_dict(self) -> dict:
        return {
            "baseline": self.baseline,
            "peaks": [{"amplitude": p.amplitude, "center_eV": p.center,
                       "fwhm_eV": p.fwhm} for p in self.peaks],
            "residual_norm": self.residual_norm,
            "converged": self.converged,
            "n_iter": self.n_iter,
        }


def _model_and_jac(E: np.ndarray, params: np.ndarray):
    n_peaks = (params.size - 1) // 3
    b = params[0]
    model = np.full(E.shape, b)
    jac = np.empty((E.size, params.size))
    jac[:, 0] = 1.0
    for k in range(n_peaks):
        A, E0, G = params[1 + 3 * k: 4 + 3 * k]
        q = (G / 2.0) ** 2
        d = (E - E0) ** 2 + q
        L = q / d
        model += A * L
        jac[:, 1 + 3 * k] = L
        jac[:, 2 + 3 * k] = A * q * 2.0 * (E - E0) / (d * d)
        jac[:, 3 + 3 * k] = A * (G / 2.0) * (E - E0) ** 2 / (d * d)
    return model, jac


def _auto_init(spec: Spectrum, n_peaks: int) -> np.ndarray:
    y = spec.intensities
    base = float(y.min())
    prominence = max(1e-3 * (y.max() - base), 1e-300)
    idx, props = find_peaks(y, prominence=prominence)
    if idx.size:
        order = np.argsort(props["prominences"])[::-1]
        idx = idx[order][:n_peaks]
    centers = list(spec.energies[idx])
    heights = list(y[idx] - base)
    while len(centers) < n_peaks:
        # unresolved blob: seed the missing peak next to the tallest sample
        k = int(np.argmax(y))
        off = (len(centers) + 1) * 2 * spec.bin_width
        centers.append(float(np.clip(spec.energies[k] + off,
                                     spec.energies[0], spec.energies[-1])))
        heights.append(float(y[k] - base))
    params = [base]
    for c, h in zip(centers, heights):
        params.extend([max(h, prominence), c, 2.0 * spec.bin_width])
    return np.array(params)


def fit_peaks(spec: Spectrum, n_peaks: int, init: np.ndarray | None = None,
              gamma_floor: float | None = None) -> PeakFit:
    """Multi-Lorentzian least squares with a shared baseline.

    init, when given, is the packed vector [b, A1, E01, G1, ...].  Bounds:
    centers inside the data span, fwhm in [gamma_floor (default one bin),
    span/2], amplitudes >= 0.
    """
    if not 1 <= n_peaks <= 4:
        raise ParameterError("n_peaks must be between 1 and 4")
    y = spec.intensities
    if float(np.ptp(y)) <= 1e-12 * max(abs(float(y.max())), 1.0):
        raise DegenerateFitError("flat spectrum: nothing to fit")
    p0 = _auto_init(spec, n_peaks) if init is None else np.asarray(init, dtype=float)
    if p0.size != 1 + 3 * n_peaks:
        raise ParameterError("init must pack [b, A1, E01, G1, ...]")

    floor = spec.bin_width if gamma_floor is None else gamma_floor
    span_y = float(np.ptp(y))
    lo = np.empty(p0.size)
    hi = np.empty(p0.size)
    lo[0], hi[0] = y.min() - 10.0 * span_y, y.max() + 10.0 * span_y
    for k in range(n_peaks):
        lo[1 + 3 * k], hi[1 + 3 * k] = 0.0, np.inf
        lo[2 + 3 * k], hi[2 + 3 * k] = spec.energies[0], spec.energies[-1]
        lo[3 + 3 * k], hi[3 + 3 * k] = floor, spec.span / 2.0
    p0 = np.clip(p0, lo, hi)

    def resid(p):
        model, _ = _model_and_jac(spec.energies, p)
        return model - y

    def jac(p):
        _, j = _model_and_jac(spec.energies, p)
        return j

    res = levenberg_marquardt(resid, jac, p0, lower=lo, upper=hi)
    peaks = [LorentzPeak(amplitude=float(res.params[1 + 3 * k]),
                         center=float(res.params[2 + 3 * k]),
                         fwhm=float(res.params[3 + 3 * k]))
             for k in range(n_peaks)]
    return PeakFit(peaks=peaks, baseline=float(res.params[0]),
                   covariance=res.covariance,
                   residual_norm=math.sqrt(res.cost),
                   converged=res.converged, n_iter=res.n_iter,
                   cost_history=res.cost_history)


def extract_q(fit: PeakFit, peak_index: int = 0) -> tuple[float, float]:
    """Q = E0/fwhm of one fitted peak with first-order 1-sigma propagation."""
    if not fit.converged:
        raise ParameterError("extract_q requires a converged fit")
    pk = fit.peaks[peak_index]
    q = pk.center / pk.fwhm
    i_e = 2 + 3 * peak_index
    i_g = 3 + 3 * peak_index
    grad = np.array([1.0 / pk.fwhm, -pk.center / pk.fwhm ** 2])
    sub = fit.covariance[np.ix_([i_e, i_g], [i_e, i_g])]
    var = float(grad @ sub @ grad)
    return float(q), math.sqrt(max(var, 0.0))


# -- synthesis ---------------------------------------------------------------

def synthesize(sys: cqed.CoupledSystem, tuning: cqed.TuningModel,
               temperatures, noise_rms: float = 0.0,
               resolution_fwhm: float = 0.0, seed: int = 0,
               n_points: int = 601, amplitude_model: str = "photonic",
               energy_window: tuple[float, float] | None = None) -> SpectrumSeries:
    """Two-branch polariton spectra over a temperature sweep.

    Branch amplitudes follow the photonic mixing weight (emission collected
    through the cavity channel) or are equal, per amplitude_model.  The sum
    of the two Lorentzians is convolved with a Gaussian of FWHM
    resolution_fwhm and Gaussian noise of rms noise_rms relative to the
    series maximum is added (seeded, bit-reproducible).
    """
    temps = np.asarray(list(temperatures), dtype=float)
    if temps.size == 0 or np.any(np.diff(temps) <= 0):
        raise ParameterError("temperatures must be non-empty and ascending")
    if amplitude_model not in ("photonic", "equal"):
        raise ParameterError("amplitude_model must be 'photonic' or 'equal'")

    modes = []
    for T in temps:
        modes.append(cqed.eigenmodes(cqed.system_at_temperature(sys, tuning, float(T))))

    if energy_window is None:
        los = min(m.E_minus for m in modes)
        his = max(m.E_plus for m in modes)
        margin = 6.0 * max(sys.Gc, sys.Gx) + 8.0 * resolution_fwhm
        energy_window = (los - margin, his + margin)
    energies = np.linspace(energy_window[0], energy_window[1], n_points)

    clean = []
    for m in modes:
        if amplitude_model == "photonic":
            a_lo, a_hi = m.weights_minus[1], m.weights_plus[1]
        else:
            a_lo, a_hi = 1.0, 1.0
        y = lorentzian(energies, a_lo, m.E_minus, m.G_minus) \
            + lorentzian(energies, a_hi, m.E_plus, m.G_plus)
        if resolution_fwhm > 0.0:
            y = _gaussian_convolve(y, energies, resolution_fwhm)
        clean.append(y)

    ref = max(float(y.max()) for y in clean)
    rng = np.random.default_rng(seed)
    out = []
    for T, y in zip(temps, clean):
        if noise_rms > 0.0:
            y = y + rng.normal(0.0, noise_rms * ref, size=y.shape)
        out.append(Spectrum(energies=energies.copy(), intensities=y,
                            temperature=float(T)))
    return SpectrumSeries(out)


def _gaussian_convolve(y: np.ndarray, energies: np.ndarray, fwhm: float) -> np.ndarray:
    de = float(energies[1] - energies[0])
    sigma = fwhm / (2.0 * math.sqrt(2.0 * math.log(2.0)))
    half = max(int(math.ceil(5.0 * sigma / de)), 1)
    x = np.arange(-half, half + 1) * de
    kernel = np.exp(-x * x / (2.0 * sigma * sigma))
    kernel /= kernel.sum()
    return np.convolve(y, kernel, mode="same")


# -- branch tracking and the anticrossing fit -------------------------------

@dataclass
class BranchTrack:
    temperatures: np.ndarray
    lower: np.ndarray           # eV; NaN where the branch was not resolved
    upper: np.ndarray
    fits: list[PeakFit | None]
    failures: list[str]


def track_peaks(series: SpectrumSeries, n_workers: int = 1) -> BranchTrack:
    """Fit each spectrum (two peaks, one as fallback) and assign branches.

    Assignment is by energy ordering; a lone peak goes to the branch whose
    previous position is nearer (continuity tie-breaking).
    """
    spectra = series.spectra

    def fit_one(spec: Spectrum):
        try:
            pf = fit_peaks(spec, 2)
            if _resolved(pf, spec):
                return pf, None
        except (DegenerateFitError, ParameterError) as err:
            return None, str(err)
        try:
            return fit_peaks(spec, 1), None
        except (DegenerateFitError, ParameterError) as err:
            return None, str(err)

    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(fit_one, spectra))
    else:
        results = [fit_one(s) for s in spectra]

    n = len(spectra)
    lower = np.full(n, np.nan)
    upper = np.full(n, np.nan)
    fits: list[PeakFit | None] = []
    failures: list[str] = []
    singles: list[int] = []
    for k, (pf, err) in enumerate(results):
        fits.append(pf)
        if err is not None:
            failures.append(f"T={spectra[k].temperature}: {err}")
            continue
        centers = sorted(p.center for p in pf.peaks)
        if len(centers) == 2:
            lower[k], upper[k] = centers
        else:
            singles.append(k)

    for k in singles:
        c = fits[k].peaks[0].center
        prev_lo = _nearest_known(lower, k)
        prev_hi = _nearest_known(upper, k)
        if prev_lo is None and prev_hi is None:
            lower[k] = c
        elif prev_hi is None or (prev_lo is not None and abs(c - prev_lo) <= abs(c - prev_hi)):
            lower[k] = c
        else:
            upper[k] = c

    return BranchTrack(temperatures=series.temperatures, lower=lower,
                       upper=upper, fits=fits, failures=failures)


def _resolved(pf: PeakFit, spec: Spectrum) -> bool:
    if not pf.converged or len(pf.peaks) != 2:
        return False
    a = max(p.amplitude for p in pf.peaks)
    if min(p.amplitude for p in pf.peaks) < 0.02 * a:
        return False
    sep = abs(pf.peaks[0].center - pf.peaks[1].center)
    return sep > 2.0 * spec.bin_width


def _nearest_known(arr: np.ndarray, k: int) -> float | None:
    known = np.nonzero(np.isfinite(arr))[0]
    if known.size == 0:
        return None
    j = known[np.argmin(np.abs(known - k))]
    return float(arr[j])


@dataclass
class AnticrossFit:
    hg: float                   # eV
    Ex0: float                  # exciton Varshni E0, eV
    alpha: float                # Varshni alpha, eV/K
    beta: float                 # Varshni beta, K
    Ec0: float                  # cavity energy at T=0, eV
    drift: float                # cavity drift, eV/K
    T0: float                   # zero-detuning temperature, K
    dE0: float                  # splitting at zero detuning per Eq.(1), eV
    rms_residual: float         # eV
    converged: bool
    predicted_lower: np.ndarray
    predicted_upper: np.ndarray
    temperatures: np.ndarray
    covariance: np.ndarray | None = None

    def tuning(self) -> cqed.TuningModel:
        return cqed.TuningModel(
            exciton=cqed.VarshniParams(E0=self.Ex0, alpha=self.alpha, beta=self.beta),
            Ec0=self.Ec0, drift=self.drift)

    def to_dict(self) -> dict:
        return {
            "hg_eV": self.hg, "Ex0_eV": self.Ex0, "alpha_eV_per_K": self.alpha,
            "beta_K": self.beta, "Ec0_eV": self.Ec0, "drift_eV_per_K": self.drift,
            "T0_K": self.T0, "dE0_eV": self.dE0,
            "rms_residual_eV": self.rms_residual, "converged": self.converged,
        }


def fit_anticrossing(track: BranchTrack, Gx: float, Gc: float,
                     free_alpha: bool = True, beta: float = 204.0,
                     init: np.ndarray | None = None) -> AnticrossFit:
    """Least-squares fit of the coupled branch positions across temperature.

    Free parameters: hg, Ex0, Ec0, drift and (optionally) the Varshni alpha;
    beta stays fixed.  Requires >= 6 usable temperatures and a detuning that
    changes sign over the fitted range.
    """
    temps = track.temperatures
    usable = np.isfinite(track.lower) | np.isfinite(track.upper)
    if int(usable.sum()) < 6:
        raise ParameterError("need >= 6 temperatures with fitted branch positions")

    all_pos = np.concatenate([track.lower[np.isfinite(track.lower)],
                              track.upper[np.isfinite(track.upper)]])
    span = float(np.ptp(all_pos)) or 1e-6

    def unpack(p):
        if free_alpha:
            hg, ex0, ec0, drift, alpha = p
        else:
            hg, ex0, ec0, drift = p
            alpha = _DEFAULT_ALPHA
        return hg, ex0, ec0, drift, alpha

    def branches(p, T):
        hg, ex0, ec0, drift, alpha = unpack(p)
        ex = ex0 - alpha * T * T / (T + beta)
        ec = ec0 + drift * T
        return cqed.branch_positions(ex, ec, Gx, Gc, hg)

    mask_lo = np.isfinite(track.lower)
    mask_hi = np.isfinite(track.upper)

    def resid(p):
        lo, hi = branches(p, temps)
        return np.concatenate([(lo[mask_lo] - track.lower[mask_lo]),
                               (hi[mask_hi] - track.upper[mask_hi])])

    def jac(p):
        # central differences; the model is cheap and smooth
        steps = np.maximum(1e-8 * np.abs(p), 1e-12)
        cols = []
        for k in range(p.size):
            dp = np.zeros_like(p)
            dp[k] = steps[k]
            cols.append((resid(p + dp) - resid(p - dp)) / (2.0 * steps[k]))
        return np.column_stack(cols)

    if init is None:
        p0 = _anticross_init(track, Gx, Gc, beta, free_alpha, resid)
    else:
        p0 = np.asarray(init, dtype=float)

    n_par = 5 if free_alpha else 4
    if p0.size != n_par:
        raise ParameterError(f"init must have {n_par} entries")
    lo_b = np.array([0.0, all_pos.min() - span, all_pos.min() - span, -1e-3]
                    + ([0.0] if free_alpha else []))
    hi_b = np.array([span, all_pos.max() + span + 0.1, all_pos.max() + span, 1e-3]
                    + ([5e-3] if free_alpha else []))
    res = levenberg_marquardt(resid, jac, p0, lower=lo_b, upper=hi_b)

    hg, ex0, ec0, drift, alpha = unpack(res.params)
    det = (ex0 - alpha * temps ** 2 / (temps + beta)) - (ec0 + drift * temps)
    if np.all(det > 0) or np.all(det < 0):
        raise UnidentifiableError("detuning never changes sign over the fitted range")
    t0 = float(brentq(lambda T: (ex0 - alpha * T * T / (T + beta)) - (ec0 + drift * T),
                      float(temps[0]), float(temps[-1])))
    radicand = hg ** 2 - ((Gc - Gx) / 4.0) ** 2
    de0 = 2.0 * math.sqrt(radicand) if radicand > 0 else 0.0
    pred_lo, pred_hi = branches(res.params, temps)
    n_pts = int(mask_lo.sum() + mask_hi.sum())
    rms = math.sqrt(res.cost / n_pts)
    return AnticrossFit(hg=float(hg), Ex0=float(ex0), alpha=float(alpha), beta=beta,
                        Ec0=float(ec0), drift=float(drift), T0=t0, dE0=de0,
                        rms_residual=rms, converged=res.converged,
                        predicted_lower=pred_lo, predicted_upper=pred_hi,
                        temperatures=temps, covariance=res.covariance)


_DEFAULT_ALPHA = 5.405e-4


def _anticross_init(track: BranchTrack, Gx: float, Gc: float, beta: float,
                    free_alpha: bool, resid) -> np.ndarray:
    temps, lower, upper = track.temperatures, track.lower, track.upper
    both = np.isfinite(lower) & np.isfinite(upper)
    if both.any():
        hg0 = float(np.nanmin(upper[both] - lower[both])) / 2.0
    else:
        hg0 = 1e-5
    hg0 = max(hg0, 1e-7)

    def first(arr, rev=False):
        idx = np.nonzero(np.isfinite(arr))[0]
        if idx.size == 0:
            return None, None
        k = idx[-1] if rev else idx[0]
        return float(temps[k]), float(arr[k])

    candidates = []
    for exciton_starts_high in (True, False):
        if exciton_starts_high:
            (t_ca, e_ca), (t_cb, e_cb) = first(lower), first(upper, rev=True)
            (t_xa, e_xa), (t_xb, e_xb) = first(upper), first(lower, rev=True)
        else:
            (t_ca, e_ca), (t_cb, e_cb) = first(upper), first(lower, rev=True)
            (t_xa, e_xa), (t_xb, e_xb) = first(lower), first(upper, rev=True)
        if e_ca is None or e_cb is None or e_xa is None or e_xb is None:
            continue
        ec0 = 0.5 * (e_ca + e_cb)
        va = t_xa * t_xa / (t_xa + beta)
        vb = t_xb * t_xb / (t_xb + beta)
        if abs(vb - va) > 1e-12:
            alpha = (e_xa - e_xb) / (vb - va)
        else:
            alpha = _DEFAULT_ALPHA
        alpha = min(max(alpha, 0.0), 5e-3)
        ex0 = 0.5 * ((e_xa + alpha * va) + (e_xb + alpha * vb))
        p = [hg0, ex0, ec0, 0.0] + ([alpha] if free_alpha else [])
        candidates.append(np.array(p))
    if not candidates:
        raise ParameterError("no usable branch positions to initialize the fit")
    costs = [float(np.sum(resid(c) ** 2)) for c in candidates]
    return candidates[int(np.argmin(costs))]


# -- CSV / manifest I/O ------------------------------------------------------

def write_spectrum(path: str | Path, spec: Spectrum) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        fh.write("energy_eV,intensity\n")
        for e, y in zip(spec.energies, spec.intensities):
            fh.write(f"{e!r},{y!r}\n")


def read_spectrum(path: str | Path, temperature: float | None = None) -> Spectrum:
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header.replace(" ", "") != "energy_eV,intensity":
            raise ConfigError(f"{path}: expected header 'energy_eV,intensity'")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return Spectrum(energies=data[:, 0], intensities=data[:, 1],
                    temperature=temperature)


def write_series(directory: str | Path, series: SpectrumSeries) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = []
    for k, spec in enumerate(series.spectra):
        name = f"spectrum_{k:04d}.csv"
        write_spectrum(directory / name, spec)
        manifest.append({"file": name, "temperature_K": spec.temperature})
    with (directory / "manifest.json").open("w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)


def read_series(directory: str | Path) -> SpectrumSeries:
    directory = Path(directory)
    manifest_path = directory / "manifest.json"
    if not manifest_path.exists():
        raise ConfigError(f"missing manifest.json in {directory}")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        raise ConfigError(f"malformed manifest.json: {err}") from err
    if not isinstance(manifest, list):
        raise ConfigError("manifest.json must be a list of {file, temperature_K}")
    spectra = []
    for entry in manifest:
        if "file" not in entry or "temperature_K" not in entry:
            raise ConfigError("manifest entries need 'file' and 'temperature_K'")
        spectra.append(read_spectrum(directory / entry["file"],
                                     temperature=float(entry["temperature_K"])))
    return SpectrumSeries(spectra)
