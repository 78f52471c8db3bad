"""Phase-space grids, fields, norms, the partial Fourier transform in x, and I/O.

Grids are uniform tensor boxes with cell-centered nodes

    node_i = -L + (i + 1/2) * h,   h = 2L / N,   i = 0 .. N-1,

which are symmetric about 0 (so velocity reflection is an exact index flip)
and carry the frequency grid xi_k = pi*k/L. The transform follows the
convention  u_hat(xi, v) = integral e^{-i x.xi} u(x, v) dx  with inverse
(2 pi)^{-n} integral e^{+i x.xi} u_hat dxi.
"""

from __future__ import annotations

import io
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import GridError

MEMORY_GUARD_CELLS = 2**28
BOUNDARY_DECAY = 1e-12

_HEADER_INT = "<i8"
_HEADER_FLOAT = "<f8"
_PAYLOAD = "<c16"


class BoundaryMassWarning(UserWarning):
    """A field carries more than BOUNDARY_DECAY relative mass at the x-boundary."""


@dataclass(frozen=True)
class VelocityGrid:
    """Uniform cell-centered grid on a velocity box (the v-part of a PhaseGrid)."""

    half_widths: tuple
    points: tuple

    def __post_init__(self):
        _validate_axes(self.half_widths, self.points)

    @classmethod
    def box(cls, n: int, half_width: float, points: int) -> "VelocityGrid":
        return cls((float(half_width),) * n, (int(points),) * n)

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def shape(self) -> tuple:
        return tuple(self.points)

    @property
    def spacings(self) -> tuple:
        return tuple(2.0 * L / N for L, N in zip(self.half_widths, self.points))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacings))

    def nodes(self, axis: int) -> np.ndarray:
        L, N = self.half_widths[axis], self.points[axis]
        h = 2.0 * L / N
        return -L + (np.arange(N) + 0.5) * h

    def mesh(self):
        """Sparse meshgrid of the velocity coordinates."""
        return np.meshgrid(*(self.nodes(j) for j in range(self.n)), indexing="ij", sparse=True)


def _validate_axes(half_widths, points):
    if not 1 <= len(points) <= 3 or len(half_widths) != len(points):
        raise GridError("dimension must be 1, 2 or 3")
    for L, N in zip(half_widths, points):
        if not (np.isfinite(L) and L > 0):
            raise GridError(f"half width must be finite and positive, got {L}")
        if N < 16 or N % 2:
            raise GridError(f"need an even number of points >= 16 per axis, got {N}")


@dataclass(frozen=True)
class PhaseGrid:
    """Uniform tensor grid on the truncated (x, v) box.

    Axes are ordered (x_1..x_n, v_1..v_n). Construction refuses more than
    MEMORY_GUARD_CELLS cells (dense storage only).
    """

    x_half_widths: tuple
    x_points: tuple
    v_half_widths: tuple
    v_points: tuple

    def __post_init__(self):
        _validate_axes(self.x_half_widths, self.x_points)
        _validate_axes(self.v_half_widths, self.v_points)
        if len(self.x_points) != len(self.v_points):
            raise GridError("x and v parts must share one dimension")
        cells = int(np.prod(self.x_points, dtype=np.int64) * np.prod(self.v_points, dtype=np.int64))
        if cells > MEMORY_GUARD_CELLS:
            raise GridError(f"{cells} cells exceed the memory guard of {MEMORY_GUARD_CELLS}")

    @classmethod
    def box(cls, n: int, x_half_width: float, x_points: int, v_half_width: float, v_points: int) -> "PhaseGrid":
        return cls(
            (float(x_half_width),) * n,
            (int(x_points),) * n,
            (float(v_half_width),) * n,
            (int(v_points),) * n,
        )

    @property
    def n(self) -> int:
        return len(self.x_points)

    @property
    def shape(self) -> tuple:
        return tuple(self.x_points) + tuple(self.v_points)

    @property
    def x_spacings(self) -> tuple:
        return tuple(2.0 * L / N for L, N in zip(self.x_half_widths, self.x_points))

    @property
    def v_spacings(self) -> tuple:
        return tuple(2.0 * L / N for L, N in zip(self.v_half_widths, self.v_points))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.x_spacings) * np.prod(self.v_spacings))

    @property
    def x_cell_volume(self) -> float:
        return float(np.prod(self.x_spacings))

    def x_nodes(self, axis: int) -> np.ndarray:
        L, N = self.x_half_widths[axis], self.x_points[axis]
        return -L + (np.arange(N) + 0.5) * (2.0 * L / N)

    def v_nodes(self, axis: int) -> np.ndarray:
        L, N = self.v_half_widths[axis], self.v_points[axis]
        return -L + (np.arange(N) + 0.5) * (2.0 * L / N)

    def xi_nodes(self, axis: int) -> np.ndarray:
        """Frequency nodes xi_k = pi*k/L for the x-axis, in FFT ordering."""
        N = self.x_points[axis]
        return 2.0 * np.pi * np.fft.fftfreq(N, d=self.x_spacings[axis])

    def mesh(self):
        """Sparse meshgrid of all coordinates, ordered (x..., v...)."""
        coords = [self.x_nodes(j) for j in range(self.n)] + [self.v_nodes(j) for j in range(self.n)]
        return np.meshgrid(*coords, indexing="ij", sparse=True)

    def velocity_grid(self) -> VelocityGrid:
        return VelocityGrid(self.v_half_widths, self.v_points)


@dataclass
class Field:
    """A distribution sampled on a PhaseGrid.

    ``values`` is float64 (tagged real case) or complex128, shaped grid.shape.
    Fields are treated as immutable values: operations return fresh fields.
    """

    grid: PhaseGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.shape != self.grid.shape:
            raise ValueError(f"values shape {values.shape} does not match grid shape {self.grid.shape}")
        if values.dtype not in (np.float64, np.complex128):
            values = values.astype(np.complex128 if np.iscomplexobj(values) else np.float64)
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        self.values = values

    @classmethod
    def from_function(cls, grid: PhaseGrid, fn) -> "Field":
        """Sample ``fn(*coords)`` on the grid mesh (coords ordered x..., v...)."""
        return cls(grid, np.asarray(fn(*grid.mesh())) + np.zeros(grid.shape))

    @property
    def is_real(self) -> bool:
        return self.values.dtype == np.float64

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy())


@dataclass(frozen=True)
class NormRecord:
    """One measured operator/field norm against its theoretical comparator."""

    p: float
    q: float
    t: float
    value: float
    bound: float | None
    kind: str  # operator_norm_exact | operator_norm_lower_bound | field_norm

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("norm value must be >= 0")
        if self.kind.startswith("operator") and self.p > self.q:
            raise ValueError("operator records need p <= q")


def _check_exponent(p) -> float:
    p = float(p)
    if not p >= 1.0:
        raise ValueError(f"Lebesgue exponent must be in [1, inf], got {p}")
    return p


def lp_norm(f: Field, p) -> float:
    """Grid L^p norm: (sum |f|^p * cellvol)^(1/p); p = inf is the grid max.

    The grid max is a lower bound of the continuum sup-norm.
    """
    p = _check_exponent(p)
    a = np.abs(f.values)
    if np.isinf(p):
        return float(a.max())
    if p == 1.0:
        return float(a.sum() * f.grid.cell_volume)
    if p == 2.0:
        return float(np.sqrt((a * a).sum() * f.grid.cell_volume))
    return float((a**p).sum() * f.grid.cell_volume) ** (1.0 / p)


def _x_weight(grid: PhaseGrid, s: float) -> np.ndarray:
    mesh = grid.mesh()[: grid.n]
    x2 = sum(c**2 for c in mesh)
    return (1.0 + x2) ** s


def weighted_l2s_norm(f: Field, s: float) -> float:
    """L^2 norm with position weight <x>^{2s}, <x> = (1 + |x|^2)^(1/2)."""
    w = _x_weight(f.grid, float(s))
    a = np.abs(f.values)
    return float(np.sqrt(np.sum(a * a * w) * f.grid.cell_volume))


def pairing(f: Field, g: Field) -> complex:
    """Sesquilinear grid pairing sum(conj(f) * g) * cellvol."""
    if f.grid != g.grid:
        raise GridError("pairing requires a shared grid")
    return complex(np.vdot(f.values, g.values) * f.grid.cell_volume)


def reflect_v(f: Field) -> Field:
    """Velocity reflection (J f)(x, v) = f(x, -v).

    Exact on cell-centered grids (nodes are symmetric about 0 by construction),
    so J o J = id and every L^p norm is preserved to the bit.
    """
    n = f.grid.n
    return Field(f.grid, np.flip(f.values, axis=tuple(range(n, 2 * n))))


def x_marginal(f: Field) -> np.ndarray:
    """Integral of the field over x, sampled on the velocity grid."""
    n = f.grid.n
    return f.values.sum(axis=tuple(range(n))) * f.grid.x_cell_volume


@dataclass
class FourierField:
    """A field transformed in x: frequency in x (FFT ordering), physical in v."""

    grid: PhaseGrid
    values: np.ndarray

    def xi_nodes(self, axis: int) -> np.ndarray:
        return self.grid.xi_nodes(axis)


def _forward_phase(grid: PhaseGrid, axis: int) -> np.ndarray:
    # u_hat(xi_k) = h * exp(i (L - h/2) xi_k) * FFT[u]_k for cell-centered nodes
    xi = grid.xi_nodes(axis)
    h = grid.x_spacings[axis]
    L = grid.x_half_widths[axis]
    return h * np.exp(1j * (L - 0.5 * h) * xi)


def check_x_boundary_decay(f: Field) -> float:
    """Relative field magnitude on the x-boundary slabs (warn above BOUNDARY_DECAY)."""
    peak = float(np.abs(f.values).max())
    if peak == 0.0:
        return 0.0
    worst = 0.0
    for axis in range(f.grid.n):
        edge = max(
            float(np.abs(np.take(f.values, 0, axis=axis)).max()),
            float(np.abs(np.take(f.values, -1, axis=axis)).max()),
        )
        worst = max(worst, edge / peak)
    return worst


def partial_fourier_x(f: Field, warn: bool = True) -> FourierField:
    """Discrete transform in the x variables matching the continuum convention.

    Includes the cell-volume factor, so a sampled Gaussian e^{-x^2/2} maps to
    sqrt(2 pi) e^{-xi^2/2} on the xi-grid. Emits BoundaryMassWarning when the
    field does not decay below BOUNDARY_DECAY at the x-boundary (periodization
    artifacts become visible there).
    """
    if warn:
        rel = check_x_boundary_decay(f)
        if rel > BOUNDARY_DECAY:
            warnings.warn(
                f"field carries {rel:.2e} relative mass at the x-boundary; "
                "transform treats x as periodic",
                BoundaryMassWarning,
                stacklevel=2,
            )
    values = f.values.astype(np.complex128)
    for axis in range(f.grid.n):
        phase = _forward_phase(f.grid, axis)
        shape = [1] * values.ndim
        shape[axis] = phase.size
        values = np.fft.fft(values, axis=axis) * phase.reshape(shape)
    return FourierField(f.grid, values)


def inverse_partial_fourier_x(F: FourierField) -> Field:
    """Inverse of partial_fourier_x; the round trip is exact to rounding."""
    values = F.values
    for axis in range(F.grid.n):
        phase = _forward_phase(F.grid, axis)
        shape = [1] * values.ndim
        shape[axis] = phase.size
        values = np.fft.ifft(values / phase.reshape(shape), axis=axis)
    return Field(F.grid, values)


def field_as_real(f: Field, tol: float = 0.0) -> Field:
    """Drop an identically-zero (or below-tol) imaginary part."""
    if f.is_real:
        return f
    im = float(np.abs(f.values.imag).max())
    scale = max(float(np.abs(f.values.real).max()), 1.0)
    if im <= tol * scale:
        return Field(f.grid, np.ascontiguousarray(f.values.real))
    return f


# ---------------------------------------------------------------------------
# Field import/export.
#
# Binary layout (all little-endian 64-bit):
#   int64   n
#   int64   x_points[n], v_points[n]
#   float64 x_half_widths[n], v_half_widths[n]
#   complex128 payload, row-major over (x_1..x_n, v_1..v_n)
# ---------------------------------------------------------------------------


def write_field(f: Field, path) -> None:
    g = f.grid
    with open(path, "wb") as fh:
        np.array([g.n], dtype=_HEADER_INT).tofile(fh)
        np.array(g.x_points + g.v_points, dtype=_HEADER_INT).tofile(fh)
        np.array(g.x_half_widths + g.v_half_widths, dtype=_HEADER_FLOAT).tofile(fh)
        np.ascontiguousarray(f.values, dtype=np.complex128).astype(_PAYLOAD).tofile(fh)


def read_field(path) -> Field:
    with open(path, "rb") as fh:
        n = int(np.fromfile(fh, dtype=_HEADER_INT, count=1)[0])
        if n not in (1, 2, 3):
            raise ValueError(f"corrupt field file: dimension {n}")
        pts = np.fromfile(fh, dtype=_HEADER_INT, count=2 * n)
        hws = np.fromfile(fh, dtype=_HEADER_FLOAT, count=2 * n)
        grid = PhaseGrid(
            tuple(hws[:n]), tuple(int(p) for p in pts[:n]),
            tuple(hws[n:]), tuple(int(p) for p in pts[n:]),
        )
        count = int(np.prod(grid.shape))
        payload = np.fromfile(fh, dtype=_PAYLOAD, count=count)
    if payload.size != count:
        raise ValueError("corrupt field file: truncated payload")
    values = payload.astype(np.complex128).reshape(grid.shape)
    if not np.any(values.imag):
        values = np.ascontiguousarray(values.real)
    return Field(grid, values)


def write_field_csv(f: Field, path) -> None:
    """Plain-text export for n = 1: columns x, v, re, im (geometry in comments)."""
    g = f.grid
    if g.n != 1:
        raise ValueError("CSV export is defined for n = 1 only")
    x, v = g.x_nodes(0), g.v_nodes(0)
    vals = f.values.astype(np.complex128)
    buf = io.StringIO()
    buf.write(f"# x_half_width={g.x_half_widths[0]!r} x_points={g.x_points[0]}\n")
    buf.write(f"# v_half_width={g.v_half_widths[0]!r} v_points={g.v_points[0]}\n")
    buf.write("x,v,re,im\n")
    for i in range(x.size):
        for j in range(v.size):
            c = vals[i, j]
            buf.write(f"{x[i]:.17g},{v[j]:.17g},{c.real:.17g},{c.imag:.17g}\n")
    with open(path, "w") as fh:
        fh.write(buf.getvalue())


def read_field_csv(path) -> Field:
    geometry = {}
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line.startswith("#"):
                for tok in line[1:].split():
                    if "=" in tok:
                        k, _, val = tok.partition("=")
                        geometry[k] = val
            elif line and not line.startswith("x,"):
                rows.append([float(tok) for tok in line.split(",")])
    try:
        grid = PhaseGrid(
            (float(geometry["x_half_width"]),), (int(geometry["x_points"]),),
            (float(geometry["v_half_width"]),), (int(geometry["v_points"]),),
        )
    except KeyError as exc:
        raise ValueError(f"CSV field file lacks geometry comment {exc}") from None
    data = np.asarray(rows)
    if data.shape[0] != np.prod(grid.shape):
        raise ValueError("CSV field file row count does not match the grid")
    values = (data[:, 2] + 1j * data[:, 3]).reshape(grid.shape)
    if not np.any(values.imag):
        values = np.ascontiguousarray(values.real)
    return Field(grid, values)
