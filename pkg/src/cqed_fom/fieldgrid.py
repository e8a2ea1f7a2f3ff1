"""Voxel grids of cavity eigenmodes: I/O, mode volume and coupling maps.

A ``FieldGrid`` stores the relative permittivity and the complex mode
field E on a regular grid of voxel centres,
``x_i = origin_x + (i + 1/2) dx`` and so on. The energy-density mode
volume is

    V = sum eps |E|^2 dV / max(eps |E|^2)

(midpoint Riemann sum over voxel centres, voxel-wise maximum), and the
position-dependent coupling rate follows from the field ratio,

    g(r) = xi * mu * sqrt(omega / (2 eps0 hbar V)) * |u . E(r)| / max|E|.

Binary format (extension ``.fgrd``, little endian)
--------------------------------------------------
    bytes 0-3   magic "FGRD"
    bytes 4-5   version, uint16 (currently 1)
    11 float64  nx, ny, nz, dx, dy, dz, origin_x, origin_y, origin_z,
                wavelength, n_ref
    nx*ny*nz float64           eps, x-fastest voxel order
    nx*ny*nz * 6 float64       Ex_re, Ex_im, Ey_re, Ey_im, Ez_re, Ez_im
                               per voxel, x-fastest voxel order

CSV format
----------
Header row ``x,y,z,eps,Ex_re,Ex_im,Ey_re,Ey_im,Ez_re,Ez_im``, one voxel
per row in strictly x-fastest order, coordinates are voxel centres in
metres. The text encoding carries no wavelength/n_ref metadata; supply
those to the loader when they matter.
"""

from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass

import numpy as np

from .constants import HBAR, SPEED_OF_LIGHT, VACUUM_PERMITTIVITY
from .errors import GridFormatError
from .params import DipoleSpec

MAGIC = b"FGRD"
VERSION = 1
DIELECTRIC_EPS_THRESHOLD = 1.0 + 1e-6


def _check_geometry(dx: float, dy: float, dz: float, origin) -> np.ndarray:
    for name, v in (("dx", dx), ("dy", dy), ("dz", dz)):
        if not np.isfinite(v) or v <= 0.0:
            raise ValueError(f"{name} must be finite and > 0, got {v!r}")
    origin = np.asarray(origin, dtype=float)
    if origin.shape != (3,) or not np.all(np.isfinite(origin)):
        raise ValueError("origin must be a finite 3-vector")
    return origin


@dataclass
class FieldGrid:
    """Permittivity and complex mode field on a regular voxel grid."""

    eps: np.ndarray  # (nx, ny, nz) float
    efield: np.ndarray  # (nx, ny, nz, 3) complex
    dx: float
    dy: float
    dz: float
    origin: np.ndarray  # (3,) low corner of the box, metres
    wavelength: float
    n_ref: float

    def __post_init__(self) -> None:
        self.eps = np.asarray(self.eps, dtype=float)
        self.efield = np.asarray(self.efield, dtype=complex)
        if self.eps.ndim != 3:
            raise ValueError(f"eps must be 3-d, got shape {self.eps.shape}")
        if self.efield.shape != self.eps.shape + (3,):
            raise ValueError(
                f"efield shape {self.efield.shape} does not match eps shape {self.eps.shape}"
            )
        self.origin = _check_geometry(self.dx, self.dy, self.dz, self.origin)
        if not np.all(np.isfinite(self.eps)):
            raise ValueError("eps contains non-finite values")
        if not np.all(np.isfinite(self.efield.view(float))):
            raise ValueError("efield contains non-finite values")
        if self.eps.min() < 1.0 - 1e-9:
            raise ValueError(f"relative permittivity below 1: min eps = {self.eps.min()}")
        if not np.isfinite(self.wavelength) or self.wavelength <= 0.0:
            raise ValueError("wavelength must be finite and > 0")
        if not np.isfinite(self.n_ref) or self.n_ref <= 0.0:
            raise ValueError("n_ref must be finite and > 0")
        if self.energy_density().max() <= 0.0:
            raise ValueError("mode field is identically zero")

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.eps.shape

    @property
    def voxel_volume(self) -> float:
        return self.dx * self.dy * self.dz

    def axes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Voxel-centre coordinates along each axis."""
        nx, ny, nz = self.shape
        return (
            self.origin[0] + (np.arange(nx) + 0.5) * self.dx,
            self.origin[1] + (np.arange(ny) + 0.5) * self.dy,
            self.origin[2] + (np.arange(nz) + 0.5) * self.dz,
        )

    def energy_density(self) -> np.ndarray:
        """eps(r) |E(r)|^2 per voxel (unnormalized)."""
        return self.eps * np.sum(np.abs(self.efield) ** 2, axis=-1)

    def dielectric_mask(self) -> np.ndarray:
        return self.eps > DIELECTRIC_EPS_THRESHOLD


@dataclass
class ScalarField:
    """A real scalar per voxel (e.g. a coupling-rate map) plus geometry."""

    values: np.ndarray  # (nx, ny, nz) float
    dielectric_mask: np.ndarray  # (nx, ny, nz) bool
    dx: float
    dy: float
    dz: float
    origin: np.ndarray
    wavelength: float
    n_ref: float

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        self.dielectric_mask = np.asarray(self.dielectric_mask, dtype=bool)
        if self.values.ndim != 3 or self.dielectric_mask.shape != self.values.shape:
            raise ValueError("values and dielectric_mask must share a 3-d shape")
        self.origin = _check_geometry(self.dx, self.dy, self.dz, self.origin)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.values.shape

    def axes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        nx, ny, nz = self.shape
        return (
            self.origin[0] + (np.arange(nx) + 0.5) * self.dx,
            self.origin[1] + (np.arange(ny) + 0.5) * self.dy,
            self.origin[2] + (np.arange(nz) + 0.5) * self.dz,
        )


# ---------------------------------------------------------------------------
# binary I/O

_HEADER = struct.Struct("<11d")


def save_grid_binary(grid: FieldGrid, path) -> None:
    nx, ny, nz = grid.shape
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<H", VERSION))
        fh.write(
            _HEADER.pack(
                float(nx),
                float(ny),
                float(nz),
                grid.dx,
                grid.dy,
                grid.dz,
                *grid.origin,
                grid.wavelength,
                grid.n_ref,
            )
        )
        fh.write(grid.eps.ravel(order="F").tobytes())
        e = grid.efield
        inter = np.empty((nx * ny * nz, 6), dtype=np.float64)
        flat = e.reshape(-1, 3, order="F")  # x-fastest over voxels
        inter[:, 0::2] = flat.real
        inter[:, 1::2] = flat.imag
        fh.write(inter.tobytes())


def load_grid_binary(path) -> FieldGrid:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 4 + 2 + _HEADER.size:
        raise GridFormatError(f"{path}: file shorter than the fixed header")
    if raw[:4] != MAGIC:
        raise GridFormatError(f"{path}: bad magic {raw[:4]!r}, expected {MAGIC!r}")
    (version,) = struct.unpack_from("<H", raw, 4)
    if version != VERSION:
        raise GridFormatError(f"{path}: unsupported format version {version}")
    header = _HEADER.unpack_from(raw, 6)
    fnx, fny, fnz, dx, dy, dz, ox, oy, oz, wavelength, n_ref = header
    dims = []
    for name, value in (("nx", fnx), ("ny", fny), ("nz", fnz)):
        if not value.is_integer() or value < 1:
            raise GridFormatError(f"{path}: non-integral dimension {name}={value}")
        dims.append(int(value))
    nx, ny, nz = dims
    n_vox = nx * ny * nz
    expected = 4 + 2 + _HEADER.size + 8 * n_vox + 48 * n_vox
    if len(raw) != expected:
        raise GridFormatError(
            f"{path}: payload size mismatch, expected {expected} bytes for"
            f" {nx}x{ny}x{nz} voxels, found {len(raw)}"
        )
    off = 4 + 2 + _HEADER.size
    eps = np.frombuffer(raw, dtype="<f8", count=n_vox, offset=off)
    # C-contiguous copies keep reductions bit-identical to freshly built grids.
    eps = np.ascontiguousarray(eps.reshape((nx, ny, nz), order="F"))
    off += 8 * n_vox
    inter = np.frombuffer(raw, dtype="<f8", count=6 * n_vox, offset=off)
    inter = inter.reshape(n_vox, 6)
    flat = inter[:, 0::2] + 1j * inter[:, 1::2]
    efield = np.ascontiguousarray(flat.reshape((nx, ny, nz, 3), order="F"))
    if not (np.all(np.isfinite(eps)) and np.all(np.isfinite(inter))):
        raise GridFormatError(f"{path}: non-finite values in payload")
    return FieldGrid(
        eps=eps,
        efield=efield,
        dx=dx,
        dy=dy,
        dz=dz,
        origin=np.array([ox, oy, oz]),
        wavelength=wavelength,
        n_ref=n_ref,
    )


# ---------------------------------------------------------------------------
# CSV I/O

CSV_COLUMNS = ["x", "y", "z", "eps", "Ex_re", "Ex_im", "Ey_re", "Ey_im", "Ez_re", "Ez_im"]


def save_grid_csv(grid: FieldGrid, path) -> None:
    xs, ys, zs = grid.axes()
    nx, ny, nz = grid.shape
    n_vox = nx * ny * nz
    table = np.empty((n_vox, len(CSV_COLUMNS)))
    table[:, 0] = np.tile(xs, ny * nz)
    table[:, 1] = np.tile(np.repeat(ys, nx), nz)
    table[:, 2] = np.repeat(zs, nx * ny)
    table[:, 3] = grid.eps.ravel(order="F")
    e_flat = grid.efield.reshape(-1, 3, order="F")
    table[:, 4::2] = e_flat.real
    table[:, 5::2] = e_flat.imag
    np.savetxt(
        path,
        table,
        fmt="%.17g",
        delimiter=",",
        header=",".join(CSV_COLUMNS),
        comments="",
    )


def _infer_axis(values: np.ndarray, name: str, path) -> tuple[int, float, float]:
    """(count, step, first) for one strictly ordered coordinate column."""
    unique = np.unique(values)
    n = unique.size
    if n == 1:
        return 1, math.nan, float(unique[0])
    steps = np.diff(unique)
    step = float(steps[0])
    if not np.allclose(steps, step, rtol=1e-9, atol=0.0):
        raise GridFormatError(f"{path}: non-uniform spacing along {name}")
    return n, step, float(unique[0])


def load_grid_csv(path, wavelength: float, n_ref: float) -> FieldGrid:
    """Read the CSV encoding; wavelength and n_ref are not stored in it."""
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise GridFormatError(f"{path}: empty file") from None
        if [h.strip() for h in header] != CSV_COLUMNS:
            raise GridFormatError(
                f"{path}: bad header {header!r}, expected {','.join(CSV_COLUMNS)}"
            )
        try:
            data = np.loadtxt(fh, delimiter=",", dtype=float, ndmin=2)
        except ValueError as exc:
            raise GridFormatError(f"{path}: malformed numeric row ({exc})") from None
    if data.size == 0:
        raise GridFormatError(f"{path}: no voxel rows")
    if data.shape[1] != len(CSV_COLUMNS):
        raise GridFormatError(f"{path}: expected {len(CSV_COLUMNS)} columns, got {data.shape[1]}")

    nx, dx, x0 = _infer_axis(data[:, 0], "x", path)
    ny, dy, y0 = _infer_axis(data[:, 1], "y", path)
    nz, dz, z0 = _infer_axis(data[:, 2], "z", path)
    if nx * ny * nz != data.shape[0]:
        raise GridFormatError(
            f"{path}: {data.shape[0]} rows do not fill a {nx}x{ny}x{nz} grid"
        )
    # single-plane grids carry no spacing information along that axis
    for step, name in ((dx, "x"), (dy, "y"), (dz, "z")):
        if math.isnan(step):
            raise GridFormatError(f"{path}: degenerate grid (single {name} plane)")
    xs = x0 + np.arange(nx) * dx
    ys = y0 + np.arange(ny) * dy
    zs = z0 + np.arange(nz) * dz
    expect = np.empty((data.shape[0], 3))
    expect[:, 0] = np.tile(xs, ny * nz)
    expect[:, 1] = np.tile(np.repeat(ys, nx), nz)
    expect[:, 2] = np.repeat(zs, nx * ny)
    if not np.allclose(data[:, :3], expect, rtol=1e-9, atol=1e-12 * max(dx, dy, dz)):
        raise GridFormatError(f"{path}: voxel rows are not in x-fastest order")

    eps = np.ascontiguousarray(data[:, 3].reshape((nx, ny, nz), order="F"))
    efield = np.ascontiguousarray(
        (data[:, 4::2] + 1j * data[:, 5::2]).reshape((nx, ny, nz, 3), order="F")
    )
    return FieldGrid(
        eps=eps,
        efield=efield,
        dx=dx,
        dy=dy,
        dz=dz,
        origin=np.array([x0 - 0.5 * dx, y0 - 0.5 * dy, z0 - 0.5 * dz]),
        wavelength=wavelength,
        n_ref=n_ref,
    )


def save_grid(grid: FieldGrid, path, fmt: str | None = None) -> None:
    fmt = fmt or ("csv" if str(path).endswith(".csv") else "fgrd")
    if fmt == "fgrd":
        save_grid_binary(grid, path)
    elif fmt == "csv":
        save_grid_csv(grid, path)
    else:
        raise ValueError(f"unknown grid format {fmt!r}")


def load_grid(
    path,
    fmt: str | None = None,
    wavelength: float | None = None,
    n_ref: float | None = None,
) -> FieldGrid:
    fmt = fmt or ("csv" if str(path).endswith(".csv") else "fgrd")
    if fmt == "fgrd":
        return load_grid_binary(path)
    if fmt == "csv":
        if wavelength is None or n_ref is None:
            raise ValueError("loading a CSV grid requires wavelength and n_ref")
        return load_grid_csv(path, wavelength, n_ref)
    raise ValueError(f"unknown grid format {fmt!r}")


# ---------------------------------------------------------------------------
# mode volume and coupling map


@dataclass(frozen=True)
class ModeVolumeResult:
    v_m3: float
    v_norm: float  # in units of (wavelength / n_ref)^3
    argmax_index: tuple[int, int, int]
    argmax_position: tuple[float, float, float]
    max_energy_density: float


def mode_volume(grid: FieldGrid) -> ModeVolumeResult:
    """Energy-density mode volume of the stored field.

    Midpoint Riemann sum over voxel centres divided by the voxel-wise
    maximum of eps |E|^2; ties in the maximum resolve to the first voxel
    in C order, and the numpy pairwise summation keeps the result
    independent of threading and evaluation order.
    """
    u = grid.energy_density()
    flat_idx = int(np.argmax(u))
    peak = float(u.ravel()[flat_idx])
    idx = np.unravel_index(flat_idx, u.shape)
    v_m3 = float(u.sum() * grid.voxel_volume / peak)
    xs, ys, zs = grid.axes()
    pos = (float(xs[idx[0]]), float(ys[idx[1]]), float(zs[idx[2]]))
    unit = (grid.wavelength / grid.n_ref) ** 3
    return ModeVolumeResult(
        v_m3=v_m3,
        v_norm=v_m3 / unit,
        argmax_index=(int(idx[0]), int(idx[1]), int(idx[2])),
        argmax_position=pos,
        max_energy_density=peak,
    )


def g_field(
    grid: FieldGrid, dipole: DipoleSpec, omega: float | None = None
) -> ScalarField:
    """Position-dependent coupling rate map g(r) in rad/s.

    ``omega`` defaults to the grid's carrier ``2 pi c / wavelength``. The
    map scales with the local field against the global field maximum, so
    its peak over the whole grid equals ``g_from_mode_volume`` for an
    aligned dipole; a fixed dipole axis only lowers it.
    """
    if omega is None:
        omega = 2.0 * math.pi * SPEED_OF_LIGHT / grid.wavelength
    if omega <= 0.0:
        raise ValueError("omega must be positive")
    vres = mode_volume(grid)
    axis = dipole.axis
    if axis is None:
        amplitude = np.sqrt(np.sum(np.abs(grid.efield) ** 2, axis=-1))
    else:
        amplitude = np.abs(np.tensordot(grid.efield, axis.astype(complex), axes=([3], [0])))
    e_max = float(np.sqrt(np.sum(np.abs(grid.efield) ** 2, axis=-1)).max())
    g_peak = (
        dipole.overlap_xi
        * dipole.mu
        * math.sqrt(omega / (2.0 * VACUUM_PERMITTIVITY * HBAR * vres.v_m3))
    )
    return ScalarField(
        values=g_peak * amplitude / e_max,
        dielectric_mask=grid.dielectric_mask(),
        dx=grid.dx,
        dy=grid.dy,
        dz=grid.dz,
        origin=grid.origin.copy(),
        wavelength=grid.wavelength,
        n_ref=grid.n_ref,
    )


# ---------------------------------------------------------------------------
# deterministic synthetic mode


@dataclass(frozen=True)
class SynthModeSpec:
    """Closed-form stand-in for a periodically patterned nanobeam mode.

    The box spans ``[-L/2, L/2]`` per axis with ``shape`` voxels. The
    analytic field is y-polarized,

        E_y(x, y, z) = cos(pi x / period) * exp(-(x^2+y^2+z^2) / (2 sigma^2)),

    divided by ``eps_dielectric`` on air voxels to mimic the
    boundary-condition field jump. The dielectric is a beam of half
    extents ``beam_half_width``/``beam_half_height`` (default: the full
    box) with air holes of half length ``hole_half_length`` centred at
    every lattice site x = k*period; a bridge of half width
    ``bridge_half_width`` survives through the holes, concentrating the
    mode the way a bowtie constriction does.
    """

    size: tuple[float, float, float]
    shape: tuple[int, int, int]
    period: float
    sigma: float
    bridge_half_width: float
    hole_half_length: float = 0.0
    beam_half_width: float | None = None
    beam_half_height: float | None = None
    eps_dielectric: float = 5.76  # n = 2.4
    wavelength: float = 737e-9
    n_ref: float = 2.4

    def __post_init__(self) -> None:
        if len(self.size) != 3 or any(s <= 0.0 for s in self.size):
            raise ValueError("size must be three positive lengths")
        if len(self.shape) != 3 or any(int(n) != n or n < 2 for n in self.shape):
            raise ValueError("shape must be three integers >= 2")
        if self.period <= 0.0 or self.sigma <= 0.0:
            raise ValueError("period and sigma must be positive")
        if self.bridge_half_width < 0.0 or self.hole_half_length < 0.0:
            raise ValueError("bridge_half_width and hole_half_length must be >= 0")
        if self.hole_half_length >= 0.5 * self.period:
            raise ValueError("hole_half_length must be below period/2")
        if self.eps_dielectric <= 1.0:
            raise ValueError("eps_dielectric must exceed 1")


# stock presets, both converged to <1% mode-volume error against a
# 2x-per-axis refinement at their 2 nm voxel pitch
DEFAULT_SYNTH_SPEC = SynthModeSpec(
    size=(400e-9, 200e-9, 120e-9),
    shape=(200, 100, 60),
    period=100e-9,
    sigma=60e-9,
    bridge_half_width=10e-9,
    hole_half_length=30e-9,
)
# tighter envelope and narrower bridge: the deep-subwavelength regime
# where the coupling collapses within tens of nanometres of the maximum
ULTRA_CONFINED_SYNTH_SPEC = SynthModeSpec(
    size=(400e-9, 200e-9, 120e-9),
    shape=(200, 100, 60),
    period=100e-9,
    sigma=25e-9,
    bridge_half_width=4e-9,
    hole_half_length=38e-9,
)


def synth_mode(spec: SynthModeSpec) -> FieldGrid:
    """Evaluate the synthetic mode of ``SynthModeSpec`` on its voxel grid."""
    lx, ly, lz = spec.size
    nx, ny, nz = (int(n) for n in spec.shape)
    dx, dy, dz = lx / nx, ly / ny, lz / nz
    origin = np.array([-0.5 * lx, -0.5 * ly, -0.5 * lz])
    xs = origin[0] + (np.arange(nx) + 0.5) * dx
    ys = origin[1] + (np.arange(ny) + 0.5) * dy
    zs = origin[2] + (np.arange(nz) + 0.5) * dz
    x, y, z = np.meshgrid(xs, ys, zs, indexing="ij")

    bhw = spec.beam_half_width if spec.beam_half_width is not None else 0.5 * ly
    bhh = spec.beam_half_height if spec.beam_half_height is not None else 0.5 * lz
    beam = (np.abs(y) <= bhw) & (np.abs(z) <= bhh)
    # hole windows centred on lattice sites x = k * period
    folded = np.abs(np.mod(x + 0.5 * spec.period, spec.period) - 0.5 * spec.period)
    in_hole_window = folded <= spec.hole_half_length
    hole = beam & in_hole_window & (np.abs(y) > spec.bridge_half_width)
    dielectric = beam & ~hole

    ey = np.cos(np.pi * x / spec.period) * np.exp(
        -(x**2 + y**2 + z**2) / (2.0 * spec.sigma**2)
    )
    ey = np.where(dielectric, ey, ey / spec.eps_dielectric)
    efield = np.zeros((nx, ny, nz, 3), dtype=complex)
    efield[..., 1] = ey
    eps = np.where(dielectric, spec.eps_dielectric, 1.0)
    return FieldGrid(
        eps=eps,
        efield=efield,
        dx=dx,
        dy=dy,
        dz=dz,
        origin=origin,
        wavelength=spec.wavelength,
        n_ref=spec.n_ref,
    )


__all__ = [
    "FieldGrid",
    "ScalarField",
    "ModeVolumeResult",
    "SynthModeSpec",
    "DEFAULT_SYNTH_SPEC",
    "ULTRA_CONFINED_SYNTH_SPEC",
    "MAGIC",
    "VERSION",
    "CSV_COLUMNS",
    "DIELECTRIC_EPS_THRESHOLD",
    "save_grid",
    "load_grid",
    "save_grid_binary",
    "load_grid_binary",
    "save_grid_csv",
    "load_grid_csv",
    "mode_volume",
    "g_field",
    "synth_mode",
]
