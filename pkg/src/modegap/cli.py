"""Command-line front end: design -> simulate -> analyze -> predict plus the
spectrum fitting commands.  CSV is the canonical output, SVG a convenience.

Exit codes: 0 success, 1 numeric/model failure, 2 input/config error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np
from scipy import constants as _const

from . import cqed, fdtd, fileio, geometry, modal, spectra
from .config import RunConfig, load_config
from .errors import (ConfigError, ModelError, NoResonanceError, ParameterError,
                     WorkbenchError)
from .svgplot import SvgPlot


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.io.seed = args.seed
        if args.out is not None:
            cfg.io.out_dir = args.out
        threads = args.threads or os.environ.get("WORKBENCH_THREADS")
        if threads is not None:
            cfg.io.threads = int(threads)
        out_dir = Path(cfg.io.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        return args.func(args, cfg, out_dir)
    except (ConfigError, ParameterError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (ModelError, WorkbenchError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="modegap",
        description="Mode-gap PhCWG cavity workbench: geometry, 2D FDTD, "
                    "mode analysis, cavity QED and spectral fitting.")
    parser.add_argument("--config", help="JSON run configuration", default=None)
    parser.add_argument("--out", help="output directory", default=None)
    parser.add_argument("--seed", type=int, default=None, help="RNG seed override")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads (or env WORKBENCH_THREADS)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design", help="build the hole layout and rasterize to .epsmap")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("simulate", help="run the FDTD scan + ringdown on an .epsmap")
    p.add_argument("--epsmap", default=None, help="input .epsmap (default out/cavity.epsmap)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="extract E0, Q and V from simulate outputs")
    p.add_argument("--probe", default=None, help="probe CSV (default out/probe.csv)")
    p.add_argument("--fldmap", default=None, help=".fldmap (default out/cavity.fldmap; optional)")
    p.add_argument("--epsmap", default=None, help=".epsmap (default out/cavity.epsmap)")
    p.add_argument("--summary", default=None, help="sim_summary.json from simulate")
    p.add_argument("--geometry", default=None, help="geometry_summary.json to echo a, r/a")
    p.add_argument("--t-min", type=int, default=None,
                   help="analysis window start (steps; default from summary)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("predict", help="coupling constant, Rabi splitting, splitting-vs-Q")
    p.add_argument("--mode-json", default=None,
                   help="ModeCharacterization JSON from analyze (else config values)")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("fit", help="multi-Lorentzian fit of one spectrum CSV")
    p.add_argument("spectrum", help="spectrum CSV (energy_eV,intensity)")
    p.add_argument("--n-peaks", type=int, default=1)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("anticross", help="track branches over a temperature series and fit")
    p.add_argument("series", help="directory of spectrum CSVs with manifest.json")
    p.set_defaults(func=cmd_anticross)

    p = sub.add_parser("qmap", help="aggregate analyze outputs into a Q map CSV")
    p.add_argument("results", help="directory of analyze JSON outputs")
    p.set_defaults(func=cmd_qmap)
    return parser


def _write_json(path: Path, doc: dict) -> None:
    with path.open("w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


# -- design ------------------------------------------------------------------

def cmd_design(args, cfg: RunConfig, out_dir: Path) -> int:
    g = cfg.geometry
    lattice = g.lattice()
    lattice.validate(cavity_ready=True)
    holes = geometry.build_lattice(lattice)
    shifted = geometry.apply_cavity_shifts(holes, g.cavity(), lattice)
    audit = geometry.shift_audit(holes, shifted)
    eps_bg = g.background_eps()
    dmap = geometry.rasterize(shifted, g.dx_nm, eps_bg, g.pad_nm)

    eps_path = out_dir / "cavity.epsmap"
    fileio.write_epsmap(eps_path, dmap)
    summary = {
        "a_nm": g.a_nm,
        "r_nm": g.r_nm,
        "r_over_a": g.r_nm / g.a_nm,
        "W_nm": lattice.waveguide_width,
        "eps_background": eps_bg,
        "n_eff": math.sqrt(eps_bg),
        "dx_nm": g.dx_nm,
        "grid": [dmap.nx, dmap.ny],
        **audit,
    }
    _write_json(out_dir / "geometry_summary.json", summary)
    print(f"holes: {audit['n_holes']}   W = {lattice.waveguide_width:.3f} nm")
    print(f"displaced holes: {audit['n_displaced']}   total displacement = "
          f"{audit['total_displacement_nm']:.1f} nm")
    print(f"wrote {eps_path} ({dmap.nx} x {dmap.ny} cells, eps_bg = {eps_bg:.4f})")
    return 0


# -- simulate ----------------------------------------------------------------

def _center_cell(dmap: geometry.DielectricMap) -> tuple[int, int]:
    ix = int(round((0.0 - dmap.origin[0]) / dmap.dx))
    iy = int(round((0.0 - dmap.origin[1]) / dmap.dx))
    return iy, ix


def cmd_simulate(args, cfg: RunConfig, out_dir: Path) -> int:
    f = cfg.fdtd
    eps_path = Path(args.epsmap) if args.epsmap else out_dir / "cavity.epsmap"
    dmap = fileio.read_epsmap(eps_path)
    a_nm = cfg.geometry.a_nm

    # pass 1: broadband discovery scan
    state = fdtd.init(dmap, S=f.courant, pml_cells=f.pml_cells,
                      check_every=f.check_every)
    iy0, ix0 = _center_cell(dmap)
    f0_scan = f.scan_center_a_over_lambda * _const.c / (a_nm * 1e-9)
    src = fdtd.SourceSpec(j=iy0, i=ix0, component=f.source_component,
                          f0=f0_scan, df=f.scan_rel_bandwidth * f0_scan)
    state.add_source(src)
    dy, dxo = f.probe_offset_cells
    probe = state.add_probe(iy0 + dy, ix0 + dxo, "hz")
    fdtd.run(state, f.scan_steps)
    # broadband transients (leaky waveguide modes) need extra settling
    t_min = src.t_off + 2 * cfg.modal.settle_periods * _periods_in_steps(f0_scan, state.dt)
    peaks = modal.resonance_scan(probe.series(state.dt), t_min,
                                 pad_factor=cfg.modal.pad_factor)
    E0 = peaks[0][0]
    f0 = modal.freq_from_energy_ev(E0)
    print(f"scan: dominant resonance E0 = {E0:.6f} eV "
          f"({len(peaks)} peak(s) above floor)")

    # pass 2: narrowband ringdown + DFT at the detected resonance
    state = fdtd.init(dmap, S=f.courant, pml_cells=f.pml_cells,
                      check_every=f.check_every)
    src = fdtd.SourceSpec(j=iy0, i=ix0, component=f.source_component,
                          f0=f0, df=f.ring_rel_bandwidth * f0)
    state.add_source(src)
    probe = state.add_probe(iy0 + dy, ix0 + dxo, "hz")
    fdtd.run(state, src.t_off)            # ring-up, no DFT yet
    state.add_monitor(2.0 * math.pi * f0)  # accumulate over the decay only
    fdtd.run(state, f.ring_steps)

    probe_path = out_dir / "probe.csv"
    fileio.write_probe_csv(probe_path, probe.series(state.dt))
    fld_path = out_dir / "cavity.fldmap"
    fileio.write_fldmap(fld_path, state.fieldmap())
    _write_json(out_dir / "sim_summary.json", {
        "E0_scan_eV": E0,
        "f0_Hz": f0,
        "dt_s": state.dt,
        "dx_nm": dmap.dx,
        "source_off_step": src.t_off,
        "steps_total": state.t,
        "pml_cells": f.pml_cells,
        "a_nm": a_nm,
    })
    print(f"wrote {probe_path}, {fld_path} (ringdown {f.ring_steps} steps)")
    return 0


def _periods_in_steps(f0: float, dt: float) -> int:
    return max(int(round(1.0 / (f0 * dt))), 1)


# -- analyze -----------------------------------------------------------------

def cmd_analyze(args, cfg: RunConfig, out_dir: Path) -> int:
    m = cfg.modal
    probe_path = Path(args.probe) if args.probe else out_dir / "probe.csv"
    series = fileio.read_probe_csv(probe_path)

    summary = {}
    summary_path = Path(args.summary) if args.summary else out_dir / "sim_summary.json"
    if summary_path.exists():
        summary = json.loads(summary_path.read_text(encoding="utf-8"))

    if args.t_min is not None:
        t_min = args.t_min
    else:
        src_off = int(summary.get("source_off_step", 0))
        f0_hint = summary.get("f0_Hz")
        settle = (m.settle_periods * _periods_in_steps(f0_hint, series.dt)
                  if f0_hint else 0)
        t_min = max(src_off + settle - series.start_step, 0)

    peaks = modal.resonance_scan(series, t_min, pad_factor=m.pad_factor)
    E0 = peaks[0][0]
    decay = modal.q_from_decay(series, E0, t_min, monotone_tol=m.monotone_tol,
                               r2_min=m.r2_min, q_cap=m.q_cap)

    report = {
        "E0_eV": E0,
        "Q": decay.Q,
        "q_method": "decay",
        "q_decay": decay.Q,
        "r_squared": decay.r_squared,
        "q_is_lower_bound": decay.is_lower_bound,
        "V_um3": None,
        "V_lambda_n3": None,
        "height_eff_nm": m.height_eff_nm,
    }

    fld_path = Path(args.fldmap) if args.fldmap else out_dir / "cavity.fldmap"
    eps_path = Path(args.epsmap) if args.epsmap else out_dir / "cavity.epsmap"
    if fld_path.exists() and eps_path.exists():
        fmap = fileio.read_fldmap(fld_path)
        dmap = fileio.read_epsmap(eps_path)
        n_vol = m.n_for_volume if m.n_for_volume else cfg.geometry.n_core
        mv = modal.mode_volume(fmap, dmap, m.height_eff_nm, E0, n_vol)
        report["V_um3"] = mv.V_um3
        report["V_lambda_n3"] = mv.V_lambda_n3
        report["confined"] = mv.confined
        if not mv.confined:
            print("warning: energy-density maximum on the grid boundary "
                  "(mode not confined)", file=sys.stderr)
        epsxx, epsyy = fdtd.material_arrays(dmap.eps)
        inset = m.flux_inset_cells
        if inset is None:
            inset = int(summary.get("pml_cells", cfg.fdtd.pml_cells)) + 3
        p_out = fdtd.flux_box(fmap, inset, dmap.nx - inset, inset, dmap.ny - inset)
        u = fdtd.stored_energy(fmap, epsxx, epsyy)
        q_flux = modal.q_from_flux(u, p_out, E0)
        report["q_flux"] = q_flux
        report["flux_decay_ratio"] = q_flux / decay.Q

    if args.geometry:
        geo = json.loads(Path(args.geometry).read_text(encoding="utf-8"))
        report["a_nm"] = geo.get("a_nm")
        report["r_over_a"] = geo.get("r_over_a")

    mode_path = out_dir / "mode.json"
    _write_json(mode_path, report)
    print(f"E0 = {E0:.6f} eV   Q = {decay.Q:.1f} (decay, r^2 = {decay.r_squared:.4f})")
    if "q_flux" in report:
        print(f"Q_flux = {report['q_flux']:.1f}   V = {report['V_lambda_n3']:.3f} (lambda/n)^3")
    print(f"wrote {mode_path}")
    return 0


# -- predict -----------------------------------------------------------------

def cmd_predict(args, cfg: RunConfig, out_dir: Path) -> int:
    c = cfg.cqed
    eps_r = c.relative_eps()
    E0 = c.E0_eV
    if args.mode_json:
        mode = json.loads(Path(args.mode_json).read_text(encoding="utf-8"))
        E0 = float(mode["E0_eV"])
        if mode.get("V_um3"):
            V = float(mode["V_um3"]) * 1e-18
        else:
            V = _volume_from_units(float(mode["V_lambda_n3"]), E0, c.n_medium)
        q_cavity = float(mode["Q"])
    else:
        V = _volume_from_units(c.V_lambda_n3, E0, c.n_medium)
        q_cavity = c.Q

    hg = cqed.coupling_constant(c.f_osc, V, eps_r)
    gc = E0 / q_cavity
    sys_ = cqed.CoupledSystem(Ex=E0, Ec=E0, Gx=c.Gx_eV, Gc=gc, hg=hg,
                              f=c.f_osc, eps_r=eps_r)
    dE = cqed.rabi_splitting(sys_)
    if dE > 0:
        strong, margin = cqed.strong_coupling_test(dE, gc)
    else:
        strong, margin = False, -gc / 2.0

    # sub-saturation range: the splitting peaks at 2*hg where Gc = Gx
    q_match = E0 / c.Gx_eV if c.Gx_eV > 0 else 1e6
    q_grid = np.logspace(3, math.log10(q_match), 151)
    curve = cqed.splitting_vs_q(E0, hg, c.Gx_eV, q_grid)

    report = {
        "inputs": {
            "f_osc": c.f_osc, "eps_r": eps_r, "E0_eV": E0, "V_m3": V,
            "Q": q_cavity, "Gx_eV": c.Gx_eV, "Gc_eV": gc,
        },
        "hg_eV": hg,
        "two_hg_eV": 2.0 * hg,
        "dE_eV": dE,
        "strong_coupling": bool(strong),
        "margin_eV": margin,
        "onset_Q": curve.onset_q,
        "saturation_Q": curve.saturation_q,
    }
    _write_json(out_dir / "predict.json", report)

    csv_path = out_dir / "splitting_vs_q.csv"
    with csv_path.open("w", encoding="utf-8") as fh:
        fh.write("Q,dE_eV\n")
        for q, de in zip(curve.q, curve.dE):
            fh.write(f"{q!r},{de!r}\n")
    plot = SvgPlot(title="Rabi splitting vs cavity Q",
                   xlabel="Q", ylabel="splitting (eV)", logx=True)
    plot.add_line(curve.q, curve.dE, label="loss-corrected splitting")
    plot.add_line(curve.q, np.full_like(curve.q, 2 * hg), color="#999",
                  label="2*hg asymptote")
    plot.save(out_dir / "splitting_vs_q.svg")

    print(f"hg = {hg * 1e6:.2f} ueV   2hg = {2 * hg * 1e6:.2f} ueV   "
          f"dE = {dE * 1e6:.2f} ueV at Q = {q_cavity:.0f}")
    print(f"strong coupling: {strong} (margin {margin * 1e6:.1f} ueV)   "
          f"onset Q* = {curve.onset_q:.0f}, saturation Q = {curve.saturation_q:.0f}")
    return 0


def _volume_from_units(v_lambda_n3: float, E0: float, n: float) -> float:
    lam_m = cqed.HC_EV_NM / E0 * 1e-9
    return v_lambda_n3 * (lam_m / n) ** 3


# -- fit ---------------------------------------------------------------------

def cmd_fit(args, cfg: RunConfig, out_dir: Path) -> int:
    spec = spectra.read_spectrum(args.spectrum)
    pf = spectra.fit_peaks(spec, args.n_peaks)
    doc = pf.to_dict()
    doc["peaks_q"] = []
    for k in range(len(pf.peaks)):
        if pf.converged:
            q, sigma = spectra.extract_q(pf, k)
            doc["peaks_q"].append({"Q": q, "sigma_Q": sigma})
        else:
            doc["peaks_q"].append(None)
    fit_path = out_dir / "fit.json"
    _write_json(fit_path, doc)

    plot = SvgPlot(title=f"Lorentzian fit ({args.n_peaks} peak(s))",
                   xlabel="energy (eV)", ylabel="intensity")
    plot.add_points(spec.energies, spec.intensities, label="data")
    plot.add_line(spec.energies, pf.model(spec.energies), label="fit")
    plot.save(out_dir / "fit.svg")
    for k, pk in enumerate(pf.peaks):
        extra = f"   Q = {doc['peaks_q'][k]['Q']:.1f}" if doc["peaks_q"][k] else ""
        print(f"peak {k}: E0 = {pk.center:.6f} eV, FWHM = {pk.fwhm * 1e6:.2f} ueV, "
              f"A = {pk.amplitude:.4g}{extra}")
    print(f"converged: {pf.converged}   wrote {fit_path}")
    return 0


# -- anticross ---------------------------------------------------------------

def cmd_anticross(args, cfg: RunConfig, out_dir: Path) -> int:
    series = spectra.read_series(args.series)
    track = spectra.track_peaks(series, n_workers=max(cfg.io.threads, 1))
    for msg in track.failures:
        print(f"fit failure: {msg}", file=sys.stderr)
    fit = spectra.fit_anticrossing(track, Gx=cfg.cqed.Gx_eV,
                                   Gc=cfg.cqed.E0_eV / cfg.cqed.Q)
    doc = fit.to_dict()
    doc["n_spectra"] = len(series.spectra)
    doc["n_failures"] = len(track.failures)
    out_path = out_dir / "anticross.json"
    _write_json(out_path, doc)

    plot = SvgPlot(title="Anticrossing fit", xlabel="temperature (K)",
                   ylabel="peak position (eV)")
    plot.add_points(track.temperatures, track.lower, label="lower branch")
    plot.add_points(track.temperatures, track.upper, color="#2c7a2c",
                    label="upper branch")
    plot.add_line(fit.temperatures, fit.predicted_lower, label="model")
    plot.add_line(fit.temperatures, fit.predicted_upper)
    plot.save(out_dir / "anticross.svg")

    print(f"hg = {fit.hg * 1e6:.2f} ueV   dE(0) = {fit.dE0 * 1e6:.2f} ueV   "
          f"T0 = {fit.T0:.2f} K   rms = {fit.rms_residual * 1e6:.2f} ueV")
    print(f"wrote {out_path}")
    return 0


# -- qmap --------------------------------------------------------------------

def cmd_qmap(args, cfg: RunConfig, out_dir: Path) -> int:
    results = Path(args.results)
    rows: dict[tuple[float, float], tuple[float, float]] = {}
    for path in sorted(results.glob("*.json")):
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError:
            continue
        needed = ("a_nm", "r_over_a", "E0_eV", "Q")
        if not all(doc.get(k) is not None for k in needed):
            continue
        key = (float(doc["a_nm"]), float(doc["r_over_a"]))
        if key in rows:
            print(f"warning: duplicate (a, r/a) = {key} in {path.name}; "
                  "last entry wins", file=sys.stderr)
        rows[key] = (float(doc["E0_eV"]), float(doc["Q"]))

    csv_path = out_dir / "qmap.csv"
    with csv_path.open("w", encoding="utf-8") as fh:
        fh.write("a_nm,r_over_a,E0_eV,Q\n")
        for (a, roa), (e0, q) in sorted(rows.items()):
            fh.write(f"{a!r},{roa!r},{e0!r},{q!r}\n")

    plot = SvgPlot(title="Q map", xlabel="E0 (eV)", ylabel="Q")
    if rows:
        pts = np.array([[e0, q] for (e0, q) in rows.values()])
        plot.add_points(pts[:, 0], pts[:, 1])
    plot.save(out_dir / "qmap.svg")
    print(f"wrote {csv_path} ({len(rows)} row(s))")
    return 0


if __name__ == "__main__":
    sys.exit(main())
