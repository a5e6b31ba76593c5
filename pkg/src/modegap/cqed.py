"""Coupled exciton-photon model for a single quantum dot in a microcavity.

Units convention: all energies, linewidths and couplings are in eV, with
linewidths Gx/Gc being FWHM of the intensity spectra.  The non-Hermitian
two-level Hamiltonian carries damping as -i*G/2 so that the loss-corrected
vacuum Rabi splitting

    dE = 2*sqrt(hg**2 - ((Gc - Gx)/4)**2)

is exactly the real-part splitting of its eigenvalues at zero detuning.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import constants as _const

from .errors import ParameterError


@dataclass(frozen=True)
class PhysicalConstants:
    """CODATA values used by the coupling-constant formula."""

    m_e: float = _const.m_e              # free electron mass, kg
    e: float = _const.e                  # elementary charge, C
    eps0: float = _const.epsilon_0       # vacuum permittivity, F/m
    hbar: float = _const.hbar            # J*s
    c: float = _const.c                  # m/s
    h: float = _const.h                  # J*s


CODATA = PhysicalConstants()

#: hc in eV*nm, handy for lambda0 = HC_EV_NM / E0_eV
HC_EV_NM = CODATA.h * CODATA.c / CODATA.e * 1e9


@dataclass(frozen=True)
class CoupledSystem:
    """Exciton-cavity pair: energies, FWHM linewidths and coupling, all in eV."""

    Ex: float                 # exciton energy
    Ec: float                 # cavity energy
    Gx: float                 # exciton FWHM
    Gc: float                 # cavity FWHM
    hg: float                 # coupling hbar*g
    f: float = 10.7           # oscillator strength
    eps_r: float = 3.46 ** 2  # relative dielectric constant

    def __post_init__(self):
        if self.Ex <= 0 or self.Ec <= 0:
            raise ParameterError("exciton and cavity energies must be positive")
        if self.Gx <= 0 or self.Gc <= 0:
            raise ParameterError("linewidths Gx, Gc must be positive")
        if self.hg < 0:
            raise ParameterError("coupling hg must be non-negative")

    @property
    def detuning(self) -> float:
        return self.Ex - self.Ec


@dataclass(frozen=True)
class VarshniParams:
    """Varshni bandgap-shrinkage parameters E(T) = E0 - alpha*T^2/(T+beta)."""

    E0: float                  # eV at T = 0
    alpha: float = 5.405e-4    # eV/K (GaAs bulk default)
    beta: float = 204.0        # K

    def __post_init__(self):
        if self.alpha < 0:
            raise ParameterError("Varshni alpha must be >= 0")
        if self.beta <= 0:
            raise ParameterError("Varshni beta must be > 0")


@dataclass(frozen=True)
class TuningModel:
    """Temperature tuning: Varshni exciton plus linearly drifting cavity."""

    exciton: VarshniParams
    Ec0: float                 # cavity energy at T = 0, eV
    drift: float = 0.0         # cavity drift dEc/dT, eV/K (sign-free)


@dataclass
class EigenmodeResult:
    """Complex eigenmodes of the coupled system, ordered by peak position."""

    E_minus: float             # lower peak position, eV
    E_plus: float              # upper peak position, eV
    G_minus: float             # lower branch FWHM, eV
    G_plus: float              # upper branch FWHM, eV
    weights_minus: tuple[float, float] = field(default=(0.0, 0.0))  # (exciton, photon)
    weights_plus: tuple[float, float] = field(default=(0.0, 0.0))

    @property
    def splitting(self) -> float:
        return self.E_plus - self.E_minus


def coupling_constant(f: float, V: float, eps_r: float,
                      constants: PhysicalConstants = CODATA) -> float:
    """Exciton-photon coupling hbar*g in eV for oscillator strength f and
    mode volume V (m^3) in a medium of relative permittivity eps_r.

    g = sqrt( 1/(4*pi*eps0*eps_r) * pi*e^2*f / (m*V) )
    """
    if f < 0:
        raise ParameterError("oscillator strength must be >= 0")
    if V <= 0:
        raise ParameterError("mode volume must be positive")
    if eps_r < 1:
        raise ParameterError("relative permittivity must be >= 1")
    k = constants
    g_sq = (1.0 / (4.0 * math.pi * k.eps0 * eps_r)) * (math.pi * k.e ** 2 * f) / (k.m_e * V)
    return k.hbar * math.sqrt(g_sq) / k.e


def rabi_splitting(sys: CoupledSystem) -> float:
    """Loss-corrected vacuum Rabi splitting at zero detuning, eV.

    Returns 0 when the losses win (radicand <= 0, weak-coupling collapse).
    """
    radicand = sys.hg ** 2 - ((sys.Gc - sys.Gx) / 4.0) ** 2
    if radicand <= 0.0:
        return 0.0
    return 2.0 * math.sqrt(radicand)


def eigenmodes(sys: CoupledSystem) -> EigenmodeResult:
    """Eigenvalues of [[Ex - i*Gx/2, hg], [hg, Ec - i*Gc/2]].

    Peak positions are Re(lambda), FWHMs are -2*Im(lambda), and the mixing
    weights are the squared normalized eigenvector components
    (exciton fraction, photon fraction) per branch.  Branches are ordered
    by real part (E_minus <= E_plus).
    """
    a = complex(sys.Ex, -sys.Gx / 2.0)
    b = complex(sys.Ec, -sys.Gc / 2.0)
    mean = 0.5 * (a + b)
    half_diff = 0.5 * (a - b)
    root = cmath.sqrt(sys.hg ** 2 + half_diff ** 2)
    lam_hi = mean + root
    lam_lo = mean - root
    if lam_hi.real < lam_lo.real:
        lam_hi, lam_lo = lam_lo, lam_hi

    def _weights(lam: complex) -> tuple[float, float]:
        # division-free eigenvector (hg, lam - a) in the (exciton, photon)
        # basis; stays finite for any hg >= 0
        w_x = sys.hg * sys.hg
        w_ph = abs(lam - a) ** 2
        norm = w_x + w_ph
        if norm == 0.0:
            # degenerate bare case: the branch coincides with one constituent
            return (1.0, 0.0) if abs(lam - a) <= abs(lam - b) else (0.0, 1.0)
        return (w_x / norm, w_ph / norm)

    return EigenmodeResult(
        E_minus=lam_lo.real,
        E_plus=lam_hi.real,
        G_minus=-2.0 * lam_lo.imag,
        G_plus=-2.0 * lam_hi.imag,
        weights_minus=_weights(lam_lo),
        weights_plus=_weights(lam_hi),
    )


def branch_positions(Ex, Ec, Gx: float, Gc: float, hg: float):
    """Peak positions (E_minus, E_plus) of the coupled eigenmodes.

    Unvalidated, vectorized over Ex/Ec; used by the anticrossing fitter where
    trial parameters are evaluated in bulk.
    """
    Ex = np.asarray(Ex, dtype=float)
    Ec = np.asarray(Ec, dtype=float)
    half_diff = 0.5 * (Ex - Ec) + 0.25j * (Gc - Gx)
    root = np.sqrt(hg ** 2 + half_diff ** 2 + 0j)
    mean = 0.5 * (Ex + Ec)
    e_a = mean + root.real
    e_b = mean - root.real
    return np.minimum(e_a, e_b), np.maximum(e_a, e_b)


def strong_coupling_test(dE: float, Gc: float) -> tuple[bool, float]:
    """Simplified strong-coupling criterion dE > Gc/2 (strict).

    Returns (is_strong, margin) with margin = dE - Gc/2 in eV.
    """
    if dE <= 0 or Gc <= 0:
        raise ParameterError("dE and Gc must be positive")
    margin = dE - Gc / 2.0
    return margin > 0.0, margin


def onset_q(E0: float, hg: float, Gx: float) -> float:
    """Smallest Q with a nonzero splitting: Gc = E0/Q crosses Gx + 4*hg."""
    if hg <= 0:
        return math.inf
    return E0 / (4.0 * hg + Gx)


def saturation_q(E0: float, hg: float, Gx: float, level: float = 0.99) -> float:
    """Smallest Q with dE >= level * 2*hg (splitting saturated)."""
    if hg <= 0:
        return math.inf
    gc_needed = Gx + 4.0 * hg * math.sqrt(1.0 - level ** 2)
    return E0 / gc_needed


@dataclass
class SplittingVsQ:
    """Rabi splitting as a function of cavity Q at fixed E0, hg, Gx."""

    q: np.ndarray              # the Q grid
    dE: np.ndarray             # splitting per Q, eV
    onset_q: float             # smallest Q with dE > 0 (closed form)
    saturation_q: float        # smallest Q with dE >= 0.99 * 2*hg


def splitting_vs_q(E0: float, hg: float, Gx: float, q_grid) -> SplittingVsQ:
    """Evaluate the splitting-vs-Q curve with Gc = E0/Q per grid point."""
    q = np.asarray(q_grid, dtype=float)
    if q.ndim != 1 or q.size == 0 or np.any(q <= 0) or np.any(np.diff(q) <= 0):
        raise ParameterError("q_grid must be positive and strictly ascending")
    gc = E0 / q
    radicand = hg ** 2 - ((gc - Gx) / 4.0) ** 2
    dE = 2.0 * np.sqrt(np.clip(radicand, 0.0, None))
    dE[radicand <= 0.0] = 0.0
    return SplittingVsQ(q=q, dE=dE, onset_q=onset_q(E0, hg, Gx),
                        saturation_q=saturation_q(E0, hg, Gx))


def exciton_energy(T: float, model: TuningModel) -> float:
    """Varshni exciton energy at temperature T (K)."""
    if T < 0:
        raise ParameterError("temperature must be >= 0")
    p = model.exciton
    return p.E0 - p.alpha * T * T / (T + p.beta)


def cavity_energy(T: float, model: TuningModel) -> float:
    """Cavity energy at temperature T: linear drift of either sign."""
    if T < 0:
        raise ParameterError("temperature must be >= 0")
    return model.Ec0 + model.drift * T


def system_at_temperature(base: CoupledSystem, tuning: TuningModel, T: float) -> CoupledSystem:
    """The coupled system with Ex, Ec evaluated from the tuning model at T."""
    return CoupledSystem(
        Ex=exciton_energy(T, tuning),
        Ec=cavity_energy(T, tuning),
        Gx=base.Gx, Gc=base.Gc, hg=base.hg, f=base.f, eps_r=base.eps_r,
    )
