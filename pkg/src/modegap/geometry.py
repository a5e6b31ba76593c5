"""Hole layout and permittivity rasterization for the mode-gap PhCWG cavity.

Coordinate frame: x runs along the waveguide axis, y transverse, origin at
the cavity center.  The lattice is triangular with row pitch sqrt(3)*a/2 and
a missing central row forming the waveguide; the innermost rows sit at
y = +-W/2 with W = w_factor*sqrt(3)*a.

Row sublattices alternate: rows at even distance from the waveguide carry a
hole on the x = 0 column (odd hole count), odd rows are offset by a/2 (even
count, n_cols - 1 holes).  This keeps every row mirror-symmetric about x = 0,
which the cavity shift pattern and the FDTD symmetry tests rely on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, ResolutionError

SQRT3 = math.sqrt(3.0)


@dataclass(frozen=True)
class LatticeSpec:
    """Triangular-lattice PhCWG parameters, lengths in nm."""

    a: float = 250.0           # lattice constant
    r: float = 70.0            # hole radius
    n_rows: int = 7            # hole rows each side of the waveguide
    n_cols: int = 21           # holes per on-axis row (odd)
    w_factor: float = 0.98     # waveguide width W = w_factor*sqrt(3)*a

    def validate(self, cavity_ready: bool = False) -> None:
        if not self.a > 0:
            raise ParameterError("lattice constant a must be > 0")
        if not 0 < self.r < self.a / 2:
            raise ParameterError("hole radius must satisfy 0 < r < a/2")
        if self.n_rows < 1:
            raise ParameterError("n_rows must be >= 1")
        if self.n_cols < 1:
            raise ParameterError("n_cols must be >= 1")
        if self.n_cols % 2 == 0:
            raise ParameterError("n_cols must be odd (mirror symmetry about x=0)")
        if not 0.5 < self.w_factor < 1.5:
            raise ParameterError("w_factor must lie in (0.5, 1.5)")
        if cavity_ready and self.n_rows < 3:
            raise ParameterError("a cavity lattice needs n_rows >= 3")
        if cavity_ready and self.n_cols < 9:
            raise ParameterError("a cavity lattice needs n_cols >= 9")

    @property
    def waveguide_width(self) -> float:
        return self.w_factor * SQRT3 * self.a


@dataclass(frozen=True)
class CavitySpec:
    """Outward hole displacements forming the mode-gap cavity, nm.

    shift_tiers[i] moves the holes of tier i on the innermost rows away from
    the waveguide axis; tier 0 is the innermost column pair.  Each tier spans
    tier_columns consecutive columns on each side of the cavity center.
    """

    shift_tiers: tuple[float, ...] = (6.0, 4.0, 2.0)
    tier_columns: int = 1

    def __post_init__(self):
        object.__setattr__(self, "shift_tiers", tuple(float(s) for s in self.shift_tiers))

    def validate(self, a: float) -> None:
        if self.tier_columns < 1:
            raise ParameterError("tier_columns must be >= 1")
        if any(s < 0 for s in self.shift_tiers):
            raise ParameterError("all shifts must be >= 0")
        if any(s2 > s1 for s1, s2 in zip(self.shift_tiers, self.shift_tiers[1:])):
            raise ParameterError("shifts must be non-increasing, innermost first")
        if any(s >= a / 10 for s in self.shift_tiers):
            raise ParameterError("shifts must be small compared to a (< a/10)")


@dataclass(frozen=True)
class HoleSet:
    """Immutable list of holes (x, y, radius), nm, origin at cavity center."""

    holes: np.ndarray          # shape (n, 3): x, y, r

    def __post_init__(self):
        arr = np.asarray(self.holes, dtype=float).reshape(-1, 3)
        arr.setflags(write=False)
        object.__setattr__(self, "holes", arr)

    def __len__(self) -> int:
        return self.holes.shape[0]

    def mirrored(self, axis: str) -> "HoleSet":
        out = self.holes.copy()
        if axis == "x":       # x -> -x
            out[:, 0] = -out[:, 0]
        elif axis == "y":
            out[:, 1] = -out[:, 1]
        else:
            raise ParameterError("axis must be 'x' or 'y'")
        return HoleSet(out)

    def bounding_box(self) -> tuple[float, float, float, float]:
        """(xmin, xmax, ymin, ymax) of the holes including radii."""
        x, y, r = self.holes[:, 0], self.holes[:, 1], self.holes[:, 2]
        return float((x - r).min()), float((x + r).max()), float((y - r).min()), float((y + r).max())


@dataclass(frozen=True)
class DielectricMap:
    """Cell-centered relative-permittivity grid.

    eps has shape (ny, nx) with x the fast axis (row-major, y outer); cell
    (ix, iy) is centered at origin + (ix*dx, iy*dx).  origin is the physical
    coordinate of the center of cell (0, 0), in nm.
    """

    nx: int
    ny: int
    dx: float                  # nm
    eps: np.ndarray            # shape (ny, nx)
    origin: tuple[float, float]
    eps_background: float

    def __post_init__(self):
        arr = np.asarray(self.eps, dtype=float)
        if arr.shape != (self.ny, self.nx):
            raise ParameterError("eps array shape must be (ny, nx)")
        arr.setflags(write=False)
        object.__setattr__(self, "eps", arr)

    def cell_center(self, ix: int, iy: int) -> tuple[float, float]:
        return self.origin[0] + ix * self.dx, self.origin[1] + iy * self.dx


def build_lattice(spec: LatticeSpec) -> HoleSet:
    """Generate the PhCWG hole pattern for spec (no cavity shifts yet)."""
    spec.validate()
    a, r = spec.a, spec.r
    half_w = spec.waveguide_width / 2.0
    half_span = (spec.n_cols - 1) // 2

    xs, ys = [], []
    for k in range(spec.n_rows):
        y = half_w + k * (SQRT3 * a / 2.0)
        if k % 2 == 0:
            # on-axis sublattice: hole at x = 0, n_cols holes
            cols = np.arange(-half_span, half_span + 1, dtype=float) * a
        else:
            # offset sublattice: holes at +-a/2, +-3a/2, ...; n_cols - 1 holes
            m = np.arange(1, 2 * half_span, 2, dtype=float)
            cols = np.concatenate([-m[::-1], m]) * (a / 2.0)
        for sign in (1.0, -1.0):
            xs.append(cols)
            ys.append(np.full(cols.shape, sign * y))

    x = np.concatenate(xs)
    y = np.concatenate(ys)
    holes = np.column_stack([x, y, np.full(x.shape, float(r))])
    _check_no_overlap(holes)
    return HoleSet(holes)


def hole_count(spec: LatticeSpec) -> int:
    """Number of holes build_lattice generates for spec."""
    n_on = (spec.n_rows + 1) // 2
    n_off = spec.n_rows // 2
    return 2 * (n_on * spec.n_cols + n_off * (spec.n_cols - 1))


def _check_no_overlap(holes: np.ndarray) -> None:
    # O(n^2) but n is a few hundred at most
    x, y, r = holes[:, 0], holes[:, 1], holes[:, 2]
    dx = x[:, None] - x[None, :]
    dy = y[:, None] - y[None, :]
    d2 = dx * dx + dy * dy
    rsum = r[:, None] + r[None, :]
    np.fill_diagonal(d2, np.inf)
    if np.any(d2 <= rsum * rsum):
        raise ParameterError("holes overlap; reduce r or the cavity shifts")


def apply_cavity_shifts(holes: HoleSet, cav: CavitySpec, spec: LatticeSpec) -> HoleSet:
    """Move innermost-row holes outward (|y| grows) per the shift tiers.

    Tier i covers the on-axis columns x = +-(i*tier_columns+1 .. (i+1)*tier_columns)*a
    on both innermost rows; the x = 0 hole never moves.
    """
    spec.validate(cavity_ready=False)
    cav.validate(spec.a)
    n_tiers = len(cav.shift_tiers)
    half_span = (spec.n_cols - 1) // 2
    if n_tiers * cav.tier_columns > half_span:
        raise ParameterError(
            f"shift tiers need {n_tiers * cav.tier_columns} columns per side "
            f"but the lattice has only {half_span}")

    a = spec.a
    half_w = spec.waveguide_width / 2.0
    out = holes.holes.copy()
    moved = 0
    for tier, shift in enumerate(cav.shift_tiers):
        if shift == 0.0:
            continue
        for col in range(tier * cav.tier_columns + 1, (tier + 1) * cav.tier_columns + 1):
            for sx in (1.0, -1.0):
                for sy in (1.0, -1.0):
                    target = (sx * col * a, sy * half_w)
                    idx = _find_hole(out, target, tol=1e-6)
                    out[idx, 1] += sy * shift
                    moved += 1
    _check_no_overlap(out)
    return HoleSet(out)


def shift_audit(before: HoleSet, after: HoleSet) -> dict:
    """Displacement summary between two hole sets of equal layout."""
    if len(before) != len(after):
        raise ParameterError("hole sets differ in size")
    d = np.hypot(after.holes[:, 0] - before.holes[:, 0],
                 after.holes[:, 1] - before.holes[:, 1])
    moved = d > 1e-12
    return {
        "n_holes": len(after),
        "n_displaced": int(moved.sum()),
        "total_displacement_nm": float(d.sum()),
        "max_displacement_nm": float(d.max()) if len(after) else 0.0,
    }


def _find_hole(holes: np.ndarray, pos: tuple[float, float], tol: float) -> int:
    d2 = (holes[:, 0] - pos[0]) ** 2 + (holes[:, 1] - pos[1]) ** 2
    idx = int(np.argmin(d2))
    if d2[idx] > tol * tol:
        raise ParameterError(f"no hole found at expected lattice site {pos}")
    return int(idx)


def rasterize(holes: HoleSet, dx: float, eps_background: float,
              pad: float, subsamples: int = 4,
              min_feature: float | None = None) -> DielectricMap:
    """Area-average the hole pattern onto a permittivity grid.

    Each cell is probed on an s x s subsample grid; eps is the exact mix
    (m*1 + (s^2-m)*eps_background)/s^2 with m the in-hole subsample count,
    so mirror-image hole sets rasterize to exactly flipped arrays.

    Resolution and padding are checked against min_feature (the lattice
    constant for a PhC pattern): dx <= min_feature/10, pad >= 2*min_feature.
    When not given it is inferred as the smallest hole center distance, or
    the smallest diameter for a lone hole.
    """
    if eps_background < 1:
        raise ParameterError("eps_background must be >= 1")
    arr = holes.holes
    if len(arr) == 0:
        raise ParameterError("cannot rasterize an empty hole set")
    if min_feature is None:
        if len(arr) > 1:
            min_feature = _min_center_distance(arr)
        else:
            min_feature = 2.0 * float(arr[0, 2])
    if dx > min_feature / 10.0 * (1.0 + 1e-9):
        raise ResolutionError(
            f"dx = {dx} nm too coarse; need dx <= {min_feature / 10.0:.3f} nm "
            "(a tenth of the smallest feature)")
    if pad < 2.0 * min_feature * (1.0 - 1e-9):
        raise ParameterError(f"pad must be >= {2.0 * min_feature:.1f} nm "
                             "(two lattice periods)")

    xmin, xmax, ymin, ymax = HoleSet(arr).bounding_box()
    half_x = max(abs(xmin), abs(xmax)) + pad
    half_y = max(abs(ymin), abs(ymax)) + pad
    nx = int(math.ceil(2.0 * half_x / dx))
    ny = int(math.ceil(2.0 * half_y / dx))

    s = subsamples
    h = dx / s
    # symmetric subsample coordinates: exact negation under index flip
    ux = (np.arange(nx * s) + 0.5 - (nx * s) / 2.0) * h
    uy = (np.arange(ny * s) + 0.5 - (ny * s) / 2.0) * h

    inside = np.zeros((ny * s, nx * s), dtype=bool)
    for hx, hy, hr in arr:
        ix0 = np.searchsorted(ux, hx - hr) - 1
        ix1 = np.searchsorted(ux, hx + hr) + 1
        iy0 = np.searchsorted(uy, hy - hr) - 1
        iy1 = np.searchsorted(uy, hy + hr) + 1
        ix0, iy0 = max(ix0, 0), max(iy0, 0)
        sub_x = ux[ix0:ix1] - hx
        sub_y = uy[iy0:iy1] - hy
        d2 = sub_y[:, None] ** 2 + sub_x[None, :] ** 2
        inside[iy0:iy1, ix0:ix1] |= d2 <= hr * hr

    m = inside.reshape(ny, s, nx, s).sum(axis=(1, 3))
    eps = (m + (s * s - m) * eps_background) / float(s * s)
    origin = (float(ux[0] + (s - 1) * h / 2.0), float(uy[0] + (s - 1) * h / 2.0))
    return DielectricMap(nx=nx, ny=ny, dx=float(dx), eps=eps,
                         origin=origin, eps_background=float(eps_background))


def _min_center_distance(holes: np.ndarray) -> float:
    x, y = holes[:, 0], holes[:, 1]
    d2 = (x[:, None] - x[None, :]) ** 2 + (y[:, None] - y[None, :]) ** 2
    np.fill_diagonal(d2, np.inf)
    return float(np.sqrt(d2.min()))


def effective_index(n_core: float, n_clad: float, thickness: float, lambda0: float) -> float:
    """Fundamental symmetric-slab TE mode effective index by bisection.

    Solves tan(kappa*d/2) = gamma/kappa with kappa^2 + gamma^2 =
    k0^2*(n_core^2 - n_clad^2); thickness and lambda0 share any length unit.
    """
    if not n_core > n_clad or n_clad < 1:
        raise ParameterError("need n_core > n_clad >= 1")
    if thickness <= 0 or lambda0 <= 0:
        raise ParameterError("thickness and lambda0 must be positive")

    k0 = 2.0 * math.pi / lambda0
    na_sq = n_core ** 2 - n_clad ** 2

    def residual(n_eff: float) -> float:
        kappa = k0 * math.sqrt(max(n_core ** 2 - n_eff ** 2, 0.0))
        gamma = k0 * math.sqrt(max(n_eff ** 2 - n_clad ** 2, 0.0))
        if kappa == 0.0:
            return -math.inf
        return math.tan(kappa * thickness / 2.0) - gamma / kappa

    # fundamental branch: kappa*d/2 in [0, pi/2); bracket the root between
    # the tan singularity (if inside the interval) and n_core
    kappa_sing = math.pi / thickness
    lo = n_clad
    if na_sq > (kappa_sing / k0) ** 2:
        lo = math.sqrt(n_core ** 2 - (kappa_sing / k0) ** 2)
    lo = lo + 1e-15 * max(1.0, lo)
    hi = n_core - 1e-15 * n_core
    if residual(lo) < 0.0:
        # extremely weak guidance: root hugs the lower edge
        return lo
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if residual(mid) > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-9:
            break
    return 0.5 * (lo + hi)
