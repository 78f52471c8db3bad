"""Hermite functions, complex-shifted oscillator eigenfunctions, and their checks.

The Hermite polynomials used here are the monic "probabilists'" family

    F_0 = 1,  F_1(s) = s,  F_{j+1}(s) = s F_j(s) - j F_{j-1}(s),

with normalized eigenfunctions phi_j(s) = (j! sqrt(2 pi))^{-1/2} e^{-s^2/4} F_j(s)
of the shifted oscillator -d^2/ds^2 + s^2/4 - 1/2 (eigenvalue j). Tensor
products psi_alpha shifted to complex arguments psi_alpha(v + 2i xi) form the
eigenfamily of the frequency-space generator; the opposite shifts +xi / -xi are
biorthonormal.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import CapabilityError, GridError
from .phase_space import VelocityGrid

J_MAX_DEFAULT = 30
XI_CAP_DEFAULT = 2.0  # |phi_j(v + 2i xi)| grows like e^{|xi|^2}; cap is overridable

# 8th-order centered second-derivative stencil
_D2_STENCIL = np.array(
    [-1.0 / 560, 8.0 / 315, -1.0 / 5, 8.0 / 5, -205.0 / 72, 8.0 / 5, -1.0 / 5, 8.0 / 315, -1.0 / 560]
)


def _check_degree(j: int, j_max: int) -> int:
    j = int(j)
    if j < 0:
        raise ValueError("degree must be a non-negative integer")
    if j > j_max:
        raise CapabilityError(f"degree {j} exceeds the cap {j_max}")
    return j


def hermite_polynomial(j: int, s, j_max: int = J_MAX_DEFAULT):
    """F_j(s) by the three-term recurrence (monic Hermite, weight e^{-s^2/2})."""
    j = _check_degree(j, j_max)
    s = np.asarray(s, dtype=complex if np.iscomplexobj(s) else float)
    prev = np.ones_like(s)
    if j == 0:
        return prev if prev.ndim else prev[()]
    cur = s.copy()
    for k in range(1, j):
        prev, cur = cur, s * cur - k * prev
    return cur if cur.ndim else cur[()]


def hermite_function(j: int, s, j_max: int = J_MAX_DEFAULT):
    """Normalized phi_j(s); unit L^2 norm, complex arguments allowed.

    Uses the normalized recurrence phi_{j+1} = (s phi_j - sqrt(j) phi_{j-1}) / sqrt(j+1)
    seeded with phi_0 = (2 pi)^{-1/4} e^{-s^2/4}, which avoids factorial overflow.
    """
    return hermite_function_table(j, s, j_max=j_max)[j]


def hermite_function_table(j_top: int, s, j_max: int = J_MAX_DEFAULT) -> np.ndarray:
    """All phi_j(s) for j = 0..j_top, stacked along a leading axis."""
    j_top = _check_degree(j_top, j_max)
    s = np.asarray(s, dtype=complex if np.iscomplexobj(s) else float)
    out = np.empty((j_top + 1,) + s.shape, dtype=s.dtype)
    out[0] = (2.0 * math.pi) ** (-0.25) * np.exp(-0.25 * s * s)
    if j_top >= 1:
        out[1] = s * out[0]
    for k in range(1, j_top):
        out[k + 1] = (s * out[k] - math.sqrt(k) * out[k - 1]) / math.sqrt(k + 1)
    return out


@dataclass(frozen=True)
class HermiteIndex:
    """Multi-index alpha of a tensor eigenfunction; degree = sum(alpha)."""

    alpha: tuple

    def __post_init__(self):
        alpha = tuple(int(a) for a in np.atleast_1d(self.alpha))
        if any(a < 0 for a in alpha) or not 1 <= len(alpha) <= 3:
            raise ValueError("multi-index must be 1-3 non-negative integers")
        object.__setattr__(self, "alpha", alpha)

    @property
    def n(self) -> int:
        return len(self.alpha)

    @property
    def degree(self) -> int:
        return sum(self.alpha)


@dataclass(frozen=True)
class ShiftedEigenfunction:
    """psi_alpha(v + 2i xi) sampled on a velocity grid.

    Eigenvalue of the frequency-space generator is degree + |xi|^2; the xi = 0
    member is real.
    """

    alpha: HermiteIndex
    xi: np.ndarray
    grid: VelocityGrid
    values: np.ndarray

    @property
    def eigenvalue(self) -> float:
        return self.alpha.degree + float(np.sum(self.xi**2))


def shifted_eigenfunction(
    alpha,
    xi,
    grid: VelocityGrid,
    j_max: int = J_MAX_DEFAULT,
    xi_cap: float = XI_CAP_DEFAULT,
) -> ShiftedEigenfunction:
    """Sample psi_alpha(v + 2i xi) on the grid (tensor product of 1-D factors)."""
    alpha = alpha if isinstance(alpha, HermiteIndex) else HermiteIndex(tuple(np.atleast_1d(alpha)))
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if xi.size != alpha.n or alpha.n != grid.n:
        raise ValueError("alpha, xi and grid must share one dimension")
    if np.linalg.norm(xi) > xi_cap:
        raise CapabilityError(
            f"|xi| = {np.linalg.norm(xi):.3g} exceeds the cap {xi_cap} "
            "(values grow like e^{|xi|^2}; pass xi_cap to override)"
        )
    _check_degree(alpha.degree, j_max)
    values = np.ones(grid.shape, dtype=complex)
    for axis, (a, x) in enumerate(zip(alpha.alpha, xi)):
        arg = grid.nodes(axis) + 2j * x if x != 0.0 else grid.nodes(axis) + 0j
        fac = hermite_function_table(a, arg, j_max=j_max)[a]
        shape = [1] * grid.n
        shape[axis] = fac.size
        values = values * fac.reshape(shape)
    if not np.any(xi):
        values = values.real + 0j
    return ShiftedEigenfunction(alpha, xi, grid, values)


def apply_p0_hat(xi, f: np.ndarray, grid: VelocityGrid) -> np.ndarray:
    """Apply the complex harmonic generator at frequency xi to a velocity field.

    -Laplacian_v (8th-order centered differences, zero extension) plus exact
    multiplication by (1/4) sum_j (v_j + 2i xi_j)^2 - n/2 + |xi|^2. Linear in f.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    f = np.asarray(f)
    if f.shape != grid.shape or xi.size != grid.n:
        raise ValueError("field/xi shape does not match the grid")
    if max(grid.spacings) > 0.5:
        raise GridError(
            f"velocity spacing {max(grid.spacings):.3g} too coarse for the stencil (need <= 0.5)"
        )
    out = np.zeros(grid.shape, dtype=complex)
    for axis in range(grid.n):
        out -= _second_derivative(f, grid.spacings[axis], axis)
    mult = np.zeros(grid.shape, dtype=complex)
    for axis in range(grid.n):
        v = grid.nodes(axis)
        shape = [1] * grid.n
        shape[axis] = v.size
        mult = mult + 0.25 * (v.reshape(shape) + 2j * xi[axis]) ** 2
    mult += -0.5 * grid.n + float(np.sum(xi**2))
    return out + mult * f


def _second_derivative(f: np.ndarray, h: float, axis: int) -> np.ndarray:
    f = np.asarray(f, dtype=complex)
    pad = [(0, 0)] * f.ndim
    pad[axis] = (4, 4)
    fp = np.pad(f, pad)  # zero extension; the basis decays far inside the box
    out = np.zeros_like(f)
    for k, c in enumerate(_D2_STENCIL):
        sl = [slice(None)] * f.ndim
        sl[axis] = slice(k, k + f.shape[axis])
        out += c * fp[tuple(sl)]
    return out / h**2


def multi_indices(n: int, max_degree: int):
    """All multi-indices of length n with degree <= max_degree, lexicographic."""
    return [
        HermiteIndex(a)
        for a in itertools.product(range(max_degree + 1), repeat=n)
        if sum(a) <= max_degree
    ]


def biorthogonality_matrix(
    xi,
    max_degree: int,
    grid: VelocityGrid | None = None,
    j_max: int = J_MAX_DEFAULT,
    xi_cap: float = XI_CAP_DEFAULT,
) -> np.ndarray:
    """Pairings <psi_alpha^{+xi}, psi_beta^{-xi}> over all degrees <= max_degree.

    Should approximate the identity matrix. The quadrature grid must keep the
    integrand's Gaussian tail below 1e-14 of its peak at the boundary; a grid
    that fails this precondition is refused with the estimated tail mass.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    n = xi.size
    if grid is None:
        grid = VelocityGrid.box(n, 12.0, 480)
    indices = multi_indices(n, max_degree)
    plus = [shifted_eigenfunction(a, xi, grid, j_max, xi_cap).values for a in indices]
    minus = [shifted_eigenfunction(a, -xi, grid, j_max, xi_cap).values for a in indices]
    _check_tail(plus[-1] * minus[-1], grid)
    vol = grid.cell_volume
    m = len(indices)
    out = np.empty((m, m), dtype=complex)
    for i in range(m):
        ci = np.conj(plus[i])
        for j in range(m):
            out[i, j] = np.sum(ci * minus[j]) * vol
    return out


def _check_tail(integrand: np.ndarray, grid: VelocityGrid) -> None:
    peak = float(np.abs(integrand).max())
    worst = 0.0
    for axis in range(grid.n):
        worst = max(
            worst,
            float(np.abs(np.take(integrand, 0, axis=axis)).max()),
            float(np.abs(np.take(integrand, -1, axis=axis)).max()),
        )
    if peak > 0 and worst > 1e-14 * peak:
        tail = worst * grid.cell_volume * max(grid.points)
        raise GridError(
            f"quadrature box too narrow: boundary integrand {worst / peak:.2e} of peak "
            f"(estimated tail mass {tail:.2e}); widen the velocity box"
        )
