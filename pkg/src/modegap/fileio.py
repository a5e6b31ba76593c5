"""On-disk formats: .epsmap / .fldmap containers and probe CSV dumps.

Both binary containers start with one UTF-8 JSON header line terminated by
'\\n', followed by raw little-endian payloads.  The .epsmap payload is
nx*ny float64 values, row-major with y as the outer index; the .fldmap
payload holds one complex (re, im interleaved float64) plane per field
component, shapes recorded in the header.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .fdtd import FieldMap, TimeSeries
from .geometry import DielectricMap

EPSMAP_EXT = ".epsmap"
FLDMAP_EXT = ".fldmap"


def _read_header(fh) -> dict:
    line = fh.readline()
    if not line.endswith(b"\n"):
        raise ConfigError("container header line missing newline")
    try:
        header = json.loads(line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as err:
        raise ConfigError(f"malformed container header: {err}") from err
    if not isinstance(header, dict):
        raise ConfigError("container header must be a JSON object")
    return header


def write_epsmap(path: str | Path, dmap: DielectricMap) -> None:
    header = {
        "nx": dmap.nx,
        "ny": dmap.ny,
        "dx_nm": dmap.dx,
        "origin_nm": [dmap.origin[0], dmap.origin[1]],
        "eps_background": dmap.eps_background,
    }
    with Path(path).open("wb") as fh:
        fh.write((json.dumps(header) + "\n").encode("utf-8"))
        fh.write(np.ascontiguousarray(dmap.eps, dtype="<f8").tobytes())


def read_epsmap(path: str | Path) -> DielectricMap:
    with Path(path).open("rb") as fh:
        header = _read_header(fh)
        for key in ("nx", "ny", "dx_nm", "origin_nm", "eps_background"):
            if key not in header:
                raise ConfigError(f"epsmap header missing {key!r}")
        nx, ny = int(header["nx"]), int(header["ny"])
        payload = fh.read(nx * ny * 8)
        if len(payload) != nx * ny * 8:
            raise ConfigError("epsmap payload truncated")
        eps = np.frombuffer(payload, dtype="<f8").reshape(ny, nx).copy()
    return DielectricMap(nx=nx, ny=ny, dx=float(header["dx_nm"]), eps=eps,
                         origin=(float(header["origin_nm"][0]),
                                 float(header["origin_nm"][1])),
                         eps_background=float(header["eps_background"]))


def write_fldmap(path: str | Path, fmap: FieldMap) -> None:
    ny, nx = fmap.shape
    header = {
        "nx": nx,
        "ny": ny,
        "dx_nm": fmap.dx,
        "origin_nm": [fmap.origin[0], fmap.origin[1]],
        "omega_rad_s": fmap.omega,
        "n_steps": fmap.n_steps,
        "norm": fmap.norm,
        "components": ["hz", "ex", "ey"],
        "shapes": {"hz": [ny, nx], "ex": [ny + 1, nx], "ey": [ny, nx + 1]},
    }
    with Path(path).open("wb") as fh:
        fh.write((json.dumps(header) + "\n").encode("utf-8"))
        for comp in (fmap.hz, fmap.ex, fmap.ey):
            fh.write(np.ascontiguousarray(comp, dtype="<c16").tobytes())


def read_fldmap(path: str | Path) -> FieldMap:
    with Path(path).open("rb") as fh:
        header = _read_header(fh)
        shapes = header.get("shapes")
        if shapes is None or header.get("components") != ["hz", "ex", "ey"]:
            raise ConfigError("fldmap header missing component shapes")
        planes = {}
        for comp in ("hz", "ex", "ey"):
            rows, cols = (int(v) for v in shapes[comp])
            payload = fh.read(rows * cols * 16)
            if len(payload) != rows * cols * 16:
                raise ConfigError(f"fldmap payload truncated in {comp}")
            planes[comp] = np.frombuffer(payload, dtype="<c16").reshape(rows, cols).copy()
    return FieldMap(omega=float(header["omega_rad_s"]), dx=float(header["dx_nm"]),
                    origin=(float(header["origin_nm"][0]), float(header["origin_nm"][1])),
                    hz=planes["hz"], ex=planes["ex"], ey=planes["ey"],
                    n_steps=int(header["n_steps"]), norm=float(header["norm"]))


def write_probe_csv(path: str | Path, series: TimeSeries) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write("step,time_s,value\n")
        for k, v in enumerate(series.samples):
            step = series.start_step + k
            fh.write(f"{step},{step * series.dt!r},{v!r}\n")


def read_probe_csv(path: str | Path) -> TimeSeries:
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header.replace(" ", "") != "step,time_s,value":
            raise ConfigError(f"{path}: expected header 'step,time_s,value'")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.shape[0] < 2:
        raise ConfigError("probe CSV needs at least two samples")
    steps = data[:, 0].astype(int)
    dt = float((data[-1, 1] - data[0, 1]) / (steps[-1] - steps[0]))
    return TimeSeries(dt=dt, samples=data[:, 2], start_step=int(steps[0]))
