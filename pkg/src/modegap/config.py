"""Run configuration: one JSON document with a section per module.

Every field is optional and carries the workbench default; unknown keys are
rejected so typos fail loudly.  Keys carry unit suffixes (a_nm, E0_eV, ...);
dimensionless quantities are bare.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .geometry import CavitySpec, LatticeSpec, effective_index


@dataclass
class GeometryConfig:
    a_nm: float = 250.0
    r_nm: float = 70.0
    n_rows: int = 7
    n_cols: int = 21
    w_factor: float = 0.98
    shift_tiers_nm: list[float] = field(default_factory=lambda: [6.0, 4.0, 2.0])
    tier_columns: int = 1
    dx_nm: float = 12.5
    pad_nm: float = 500.0
    n_core: float = 3.46
    n_clad: float = 1.0
    thickness_nm: float = 180.0
    lambda0_nm: float = 968.6
    eps_background: float | None = None   # derived from the slab when null

    def lattice(self) -> LatticeSpec:
        return LatticeSpec(a=self.a_nm, r=self.r_nm, n_rows=self.n_rows,
                           n_cols=self.n_cols, w_factor=self.w_factor)

    def cavity(self) -> CavitySpec:
        return CavitySpec(shift_tiers=tuple(self.shift_tiers_nm),
                          tier_columns=self.tier_columns)

    def background_eps(self) -> float:
        if self.eps_background is not None:
            return self.eps_background
        n_eff = effective_index(self.n_core, self.n_clad,
                                self.thickness_nm, self.lambda0_nm)
        return n_eff ** 2


@dataclass
class FdtdConfig:
    courant: float = 0.5
    pml_cells: int = 10
    check_every: int = 10
    scan_center_a_over_lambda: float = 0.26
    scan_rel_bandwidth: float = 0.12
    scan_steps: int = 30000
    ring_rel_bandwidth: float = 0.003
    ring_steps: int = 45000
    probe_offset_cells: list[int] = field(default_factory=lambda: [4, 3])
    source_component: str = "hz"


@dataclass
class ModalConfig:
    height_eff_nm: float = 180.0
    r2_min: float = 0.99
    q_cap: float = 1e9
    monotone_tol: float = 0.05
    pad_factor: int = 8
    settle_periods: int = 20       # skipped after source-off before analysis
    flux_inset_cells: int | None = None   # default: pml_cells + 3
    n_for_volume: float | None = None     # default: geometry.n_core


@dataclass
class CqedConfig:
    f_osc: float = 10.7
    n_medium: float = 3.46
    eps_r: float | None = None     # default n_medium**2
    E0_eV: float = 1.28
    Q: float = 8000.0
    Gx_eV: float = 78e-6
    V_lambda_n3: float = 1.3
    varshni_E0_eV: float = 1.28030
    varshni_alpha_eV_per_K: float = 5.405e-4
    varshni_beta_K: float = 204.0
    cavity_Ec0_eV: float = 1.28
    cavity_drift_eV_per_K: float = 0.0

    def relative_eps(self) -> float:
        return self.eps_r if self.eps_r is not None else self.n_medium ** 2


@dataclass
class SpectraConfig:
    resolution_fwhm_eV: float = 50e-6
    noise_rms: float = 0.01
    n_points: int = 601
    amplitude_model: str = "photonic"
    t_start_K: float = 5.0
    t_stop_K: float = 17.0
    t_step_K: float = 0.5

    def temperatures(self) -> np.ndarray:
        n = int(math.floor((self.t_stop_K - self.t_start_K) / self.t_step_K + 1e-9)) + 1
        return self.t_start_K + self.t_step_K * np.arange(n)


@dataclass
class IoConfig:
    out_dir: str = "out"
    seed: int = 12345
    threads: int = 1


@dataclass
class RunConfig:
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    fdtd: FdtdConfig = field(default_factory=FdtdConfig)
    modal: ModalConfig = field(default_factory=ModalConfig)
    cqed: CqedConfig = field(default_factory=CqedConfig)
    spectra: SpectraConfig = field(default_factory=SpectraConfig)
    io: IoConfig = field(default_factory=IoConfig)


_SECTIONS = {f.name: f.type for f in dataclasses.fields(RunConfig)}


def _build_section(cls, data: dict, section: str):
    allowed = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in section {section!r}: {sorted(unknown)}")
    return cls(**data)


def config_from_dict(doc: dict) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    unknown = set(doc) - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown config section(s): {sorted(unknown)}")
    kwargs = {}
    for name, f in ((f.name, f) for f in dataclasses.fields(RunConfig)):
        section = doc.get(name, {})
        if not isinstance(section, dict):
            raise ConfigError(f"config section {name!r} must be an object")
        kwargs[name] = _build_section(f.default_factory, section, name)
    return RunConfig(**kwargs)


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"malformed JSON in {path}: {err}") from err
    return config_from_dict(doc)


def config_to_dict(cfg: RunConfig) -> dict:
    return dataclasses.asdict(cfg)
