"""Semigroup steps: free propagator (two backends), oscillator step in v, exact
drift map, splitting compositions, and the first-order coupling term.

The free step realizes the closed-form kernel of `kernels` as a grid operator.
Two interchangeable backends exist:

* ``fourier_factorized`` — transform in x; for each frequency multiply by the
  separable phase factors, apply the velocity kernel by quadrature, multiply
  by the frequency decay; transform back. Works for n in {1, 2, 3} by
  per-coordinate tensor application. This is the fast path.
* ``direct_kernel`` — direct quadrature of the kernel over the source grid
  (n = 1 only; cost guard). Slow, structurally independent; used to
  cross-validate the factorized path.

Both backends discretize the same operator: the x-variable is treated as
periodic over the box (the kernel's x-factor is folded at the period), so they
agree to quadrature precision on any field, including ones that do not decay
in x. For fields that decay below ~1e-12 at the x-boundary this coincides
with the free-space propagator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from ._backend import core
from .errors import CapabilityError
from .phase_space import (
    BOUNDARY_DECAY,
    BoundaryMassWarning,
    Field,
    PhaseGrid,
    VelocityGrid,
    check_x_boundary_decay,
)
from .potentials import Potential

import warnings

BACKENDS = ("fourier_factorized", "direct_kernel")
SPLITTINGS = ("strang", "lie")
INTERPOLATIONS = ("linear", "cubic")


class KernelResolutionWarning(UserWarning):
    """The per-step velocity kernel is narrower than the grid resolves.

    The kernel width in v is ~ sqrt(2 tanh(t)); trapezoid quadrature of a
    kernel narrower than the spacing has row-sum ripple that compounds over
    many steps. Refine the velocity grid or increase the step.
    """


@dataclass(frozen=True)
class PropagatorPlan:
    """How to advance the perturbed flow: backend, splitting, step, interpolation."""

    backend: str = "fourier_factorized"
    splitting: str = "strang"
    dt: float = 0.01
    interpolation: str = "linear"
    boundary: str = "zero_fill"

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}")
        if self.splitting not in SPLITTINGS:
            raise ValueError(f"splitting must be one of {SPLITTINGS}")
        if self.interpolation not in INTERPOLATIONS:
            raise ValueError(f"interpolation must be one of {INTERPOLATIONS}")
        if self.boundary != "zero_fill":
            raise ValueError("only zero_fill boundary handling is implemented")
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValueError("dt must be finite and > 0")


def harmonic_kernel_matrix(vnodes: np.ndarray, t: float) -> np.ndarray:
    """One-dimensional velocity kernel sampled on a node array (symmetric matrix)."""
    return kernels.harmonic_kernel(
        vnodes[:, None, None], vnodes[None, :, None], t
    )


class FreePropagator:
    """The free step at a fixed time on a fixed grid, with precomputed pieces.

    Reused across splitting steps; a fresh Field is returned by ``apply``.
    """

    def __init__(self, grid: PhaseGrid, t: float, backend: str = "fourier_factorized"):
        if not (math.isfinite(t) and t > 0):
            raise ValueError("time must be finite and > 0")
        if backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}")
        if backend == "direct_kernel" and grid.n != 1:
            raise CapabilityError("direct_kernel backend is limited to n = 1 (cost guard)")
        self.grid = grid
        self.t = float(t)
        self.backend = backend
        prof = kernels.time_profiles(t)
        self._sigma, self._omega = prof.sigma, prof.omega
        width = math.sqrt(2.0 * math.tanh(self.t))
        if width < max(grid.v_spacings):
            warnings.warn(
                f"velocity kernel width {width:.3g} at t={self.t:g} is below the grid "
                f"spacing {max(grid.v_spacings):.3g}; quadrature ripple will compound "
                "over repeated steps",
                KernelResolutionWarning,
                stacklevel=2,
            )
        if backend == "direct_kernel":
            self._kmat = np.ascontiguousarray(harmonic_kernel_matrix(grid.v_nodes(0), t))
        else:
            self._mults = []
            for j in range(grid.n):
                xi = grid.xi_nodes(j)
                v = grid.v_nodes(j)
                kq = harmonic_kernel_matrix(v, t) * grid.v_spacings[j]
                mul = np.exp(-1j * self._omega * np.outer(xi, v))
                decay = np.exp(-self._sigma * xi * xi)
                self._mults.append((kq, mul, decay))

    def apply(self, f: Field, warn: bool = True) -> Field:
        if f.grid != self.grid:
            raise ValueError("field grid does not match the propagator grid")
        if warn:
            rel = check_x_boundary_decay(f)
            if rel > BOUNDARY_DECAY:
                warnings.warn(
                    f"field carries {rel:.2e} relative mass at the x-boundary; "
                    "the free step treats x as periodic over the box",
                    BoundaryMassWarning,
                    stacklevel=2,
                )
        if self.backend == "direct_kernel":
            return self._apply_direct(f)
        return self._apply_fourier(f)

    def _apply_direct(self, f: Field) -> Field:
        g = self.grid
        x, v = g.x_nodes(0), g.v_nodes(0)
        period = 2.0 * g.x_half_widths[0]
        vol = g.cell_volume * (4.0 * math.pi * self._sigma) ** -0.5

        def run(a):
            return vol * core.free_apply_direct(
                np.ascontiguousarray(a), x, v, self._kmat, self._sigma, self._omega, period
            )

        if f.is_real:
            return Field(g, run(f.values))
        return Field(g, run(f.values.real) + 1j * run(f.values.imag))

    def _apply_fourier(self, f: Field) -> Field:
        g = self.grid
        n = g.n
        values = np.fft.fftn(f.values.astype(np.complex128), axes=tuple(range(n)))
        for j, (kq, mul, decay) in enumerate(self._mults):
            shape = [1] * values.ndim
            shape[j] = mul.shape[0]
            shape[n + j] = mul.shape[1]
            m = mul.reshape(shape)
            values = values * m
            values = np.moveaxis(np.tensordot(values, kq, axes=([n + j], [1])), -1, n + j)
            values = values * m
            dshape = [1] * values.ndim
            dshape[j] = decay.size
            values = values * decay.reshape(dshape)
        values = np.fft.ifftn(values, axes=tuple(range(n)))
        if f.is_real:
            return Field(g, np.ascontiguousarray(values.real))
        return Field(g, values)


def free_step_direct(f: Field, t: float) -> Field:
    """Advance f by the free flow via direct kernel quadrature (n = 1 only)."""
    return FreePropagator(f.grid, t, "direct_kernel").apply(f)


def free_step_fourier(f: Field, t: float, warn: bool = True) -> Field:
    """Advance f by the free flow via the factorized frequency-space path."""
    return FreePropagator(f.grid, t, "fourier_factorized").apply(f, warn=warn)


def harmonic_step(g: np.ndarray, grid: VelocityGrid, t: float) -> np.ndarray:
    """Oscillator semigroup in velocity: quadrature of the kernel against g."""
    if not (math.isfinite(t) and t > 0):
        raise ValueError("time must be finite and > 0")
    g = np.asarray(g)
    if g.shape != grid.shape:
        raise ValueError("field shape does not match the velocity grid")
    out = g.astype(complex if np.iscomplexobj(g) else float)
    for axis in range(grid.n):
        kq = harmonic_kernel_matrix(grid.nodes(axis), t) * grid.spacings[axis]
        out = np.moveaxis(np.tensordot(out, kq, axes=([axis], [1])), -1, axis)
    return out


class DriftMap:
    """The exact drift (e^{-tau W} f)(x, v) = f(x, v + tau grad V(x)) on the grid.

    Velocity samples falling outside the box read zero; the L1 mass lost that
    way per application is accumulated into an optional diagnostics dict.
    Linear interpolation keeps non-negativity and the max norm; cubic is more
    accurate but can undershoot.
    """

    def __init__(self, grid: PhaseGrid, potential: Potential, tau: float, interpolation: str = "linear"):
        if interpolation not in INTERPOLATIONS:
            raise ValueError(f"interpolation must be one of {INTERPOLATIONS}")
        self.grid = grid
        self.tau = float(tau)
        self.interpolation = interpolation
        self.potential = potential
        n = grid.n
        xmesh = np.meshgrid(*(grid.x_nodes(j) for j in range(n)), indexing="ij")
        xstack = np.stack(xmesh, axis=-1)
        grad = np.asarray(potential.gradient(xstack.reshape(-1, n))).reshape(xstack.shape)
        self.trivial = not np.any(grad)
        # per v-axis shift in cell units over the x-mesh
        self._deltas = [self.tau * grad[..., k] / grid.v_spacings[k] for k in range(n)]
        max_shift = max((float(np.abs(d).max()) for d in self._deltas), default=0.0)
        self.max_shift_cells = max_shift

    def apply(self, f: Field, diag: dict | None = None) -> Field:
        if f.grid != self.grid:
            raise ValueError("field grid does not match the drift grid")
        if self.trivial:
            return f.copy()
        g = self.grid
        n = g.n
        shift = core.shift_v_linear if self.interpolation == "linear" else core.shift_v_cubic
        values = f.values
        mass_before = float(np.abs(values).sum()) * g.cell_volume
        for k in range(n):
            axis = n + k
            moved = np.moveaxis(values, axis, -1)
            lead = moved.shape[:-1]
            nv = moved.shape[-1]
            # delta depends only on the x-part; broadcast across the other v axes
            dshape = g.x_points + tuple(
                g.v_points[m] for m in range(n) if m != k
            )
            delta = np.ascontiguousarray(
                np.broadcast_to(
                    self._deltas[k].reshape(g.x_points + (1,) * (n - 1)), dshape
                ).reshape(-1)
            )
            flat = np.ascontiguousarray(moved.reshape(-1, nv))
            if np.iscomplexobj(flat):
                out = shift(np.ascontiguousarray(flat.real), delta) + 1j * shift(
                    np.ascontiguousarray(flat.imag), delta
                )
            else:
                out = shift(flat, delta)
            values = np.moveaxis(out.reshape(lead + (nv,)), -1, axis)
        if diag is not None:
            mass_after = float(np.abs(values).sum()) * g.cell_volume
            diag["shifted_out_mass"] = diag.get("shifted_out_mass", 0.0) + max(
                mass_before - mass_after, 0.0
            )
        return Field(g, values)


def drift_step(f: Field, t: float, potential: Potential, plan: PropagatorPlan, diag: dict | None = None) -> Field:
    """Apply the exact drift for a signed time t with the plan's interpolation."""
    return DriftMap(f.grid, potential, t, plan.interpolation).apply(f, diag=diag)


def evolve(
    f: Field,
    t_total: float,
    potential: Potential,
    plan: PropagatorPlan,
    sample_times,
    diag: dict | None = None,
) -> list[Field]:
    """Advance the perturbed flow by splitting and return snapshots.

    Strang: per step dt apply drift(dt/2), free(dt), drift(dt/2);
    Lie: drift(dt) then free(dt). ``sample_times`` must be multiples of dt
    inside (0, t_total].
    """
    dt = plan.dt
    n_steps = int(round(t_total / dt))
    if n_steps < 1 or abs(n_steps * dt - t_total) > 1e-9 * max(dt, t_total):
        raise ValueError("t_total must be a positive multiple of dt")
    samples = sorted(float(s) for s in sample_times)
    step_of = {}
    for s in samples:
        k = int(round(s / dt))
        if not (1 <= k <= n_steps) or abs(k * dt - s) > 1e-9 * max(dt, 1.0):
            raise ValueError(f"sample time {s} is not a step multiple inside (0, t_total]")
        step_of.setdefault(k, []).append(s)

    rel = check_x_boundary_decay(f)
    if rel > BOUNDARY_DECAY:
        warnings.warn(
            f"initial field carries {rel:.2e} relative mass at the x-boundary; "
            "x is treated as periodic over the box",
            BoundaryMassWarning,
            stacklevel=2,
        )
    free = FreePropagator(f.grid, dt, plan.backend)
    if plan.splitting == "strang":
        half = DriftMap(f.grid, potential, 0.5 * dt, plan.interpolation)
    else:
        full = DriftMap(f.grid, potential, dt, plan.interpolation)

    out = []
    u = f.copy()
    for k in range(1, n_steps + 1):
        if plan.splitting == "strang":
            u = half.apply(u, diag)
            u = free.apply(u, warn=False)
            u = half.apply(u, diag)
        else:
            u = full.apply(u, diag)
            u = free.apply(u, warn=False)
        if k in step_of:
            for _ in step_of[k]:
                out.append(u.copy())
    return out


def maxwellian_field(grid: PhaseGrid, potential: Potential) -> Field:
    """The equilibrium square root sampled on the grid (real field)."""
    n = grid.n
    mesh = grid.mesh()
    xstack = np.stack(np.meshgrid(*(grid.x_nodes(j) for j in range(n)), indexing="ij"), axis=-1)
    vx = np.asarray(potential.value(xstack.reshape(-1, n))).reshape(grid.x_points)
    v2 = sum(np.asarray(mesh[n + j]) ** 2 for j in range(n))
    values = (2.0 * math.pi) ** (-0.25 * n) * np.exp(
        -0.5 * vx.reshape(grid.x_points + (1,) * n) - 0.25 * v2
    )
    return Field(grid, values + np.zeros(grid.shape))


def apply_w(f: Field, potential: Potential) -> Field:
    """The coupling operator W f = -grad V(x) . grad_v f (2nd-order centered)."""
    g = f.grid
    n = g.n
    xmesh = np.meshgrid(*(g.x_nodes(j) for j in range(n)), indexing="ij")
    xstack = np.stack(xmesh, axis=-1)
    grad = np.asarray(potential.gradient(xstack.reshape(-1, n))).reshape(xstack.shape)
    out = np.zeros(g.shape, dtype=f.values.dtype)
    for k in range(n):
        dfdv = np.gradient(f.values, g.v_spacings[k], axis=n + k)
        gk = grad[..., k].reshape(g.x_points + (1,) * n)
        out -= gk * dfdv
    return Field(g, out)


def born_term(f: Field, t: float, potential: Potential, quadrature_steps: int = 32) -> Field:
    """First-order coupling correction to the free flow (midpoint rule in s).

    Equals the s-integral of  - free(t-s) W free(s)  applied to f, so that
    free(t) f + born_term(f, t) matches the full evolution to second order in
    the coupling amplitude.
    """
    if quadrature_steps < 4:
        raise ValueError("need at least 4 quadrature steps")
    if not (math.isfinite(t) and t > 0):
        raise ValueError("time must be finite and > 0")
    if isinstance(potential, Potential) and potential.family == "zero":
        return Field(f.grid, np.zeros(f.grid.shape, dtype=f.values.dtype))
    ds = t / quadrature_steps
    acc = np.zeros(f.grid.shape, dtype=complex)
    for k in range(quadrature_steps):
        s = (k + 0.5) * ds
        u = free_step_fourier(f, s, warn=False)
        w = apply_w(u, potential)
        acc -= ds * free_step_fourier(w, t - s, warn=False).values
    if f.is_real:
        return Field(f.grid, np.ascontiguousarray(acc.real))
    return Field(f.grid, acc)
