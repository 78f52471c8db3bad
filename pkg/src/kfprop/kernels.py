"""Closed-form scalar profiles and integral kernels of the kinetic phase-space flow.

The free (potential-less) propagator has an explicit Gaussian kernel built from
four scalar functions of time:

    sigma(t) = t - 2*coth(t) + 2*cosech(t)      x-diffusion scale
    theta(t) = 4*pi*exp(-t)*sinh(t)             oscillator kernel scale
    gamma(t) = sigma(t)*theta(t)                composite decay scale
    omega(t) = coth(t) - cosech(t)              drift coupling

All kernels are assembled from one-dimensional factors (the generator is a
direct sum over coordinates), and every exponent is combined before a single
`exp` call so that large arguments underflow to 0 instead of producing inf*0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CapabilityError

# Below this time the naive sigma formula loses about half the mantissa to
# cancellation (both coth and cosech behave like 1/t), so a series is used.
SMALL_T_SWITCH = 0.05

# sigma(t) = t - 2*tanh(t/2) = t^3/12 - t^5/120 + 17 t^7/20160 - ...
_SIGMA_SERIES = (
    1.0 / 12.0,
    -1.0 / 120.0,
    17.0 / 20160.0,
    -31.0 / 362880.0,
    691.0 / 79833600.0,
)


def _check_time(t):
    t = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t)) or np.any(t <= 0.0):
        raise ValueError("time must be finite and > 0")
    return t


def omega_profile(t):
    """Drift coupling omega(t) = coth(t) - cosech(t), evaluated as tanh(t/2).

    The two expressions agree algebraically; the tanh form is free of the
    1/t - 1/t cancellation of the defining one.
    """
    return np.tanh(0.5 * _check_time(t))


def sigma_profile(t):
    """x-diffusion scale sigma(t) = t - 2*coth(t) + 2*cosech(t).

    Equal to t - 2*tanh(t/2); below ``SMALL_T_SWITCH`` the Taylor series
    t^3/12 - t^5/120 + ... is used (five terms, relative error < 1e-12 at the
    switch point).
    """
    t = _check_time(t)
    c0, c1, c2, c3, c4 = _SIGMA_SERIES
    t2 = t * t
    series = t * t2 * (c0 + t2 * (c1 + t2 * (c2 + t2 * (c3 + t2 * c4))))
    direct = t - 2.0 * np.tanh(0.5 * t)
    out = np.where(t < SMALL_T_SWITCH, series, direct)
    return out if out.ndim else float(out)


def theta_profile(t):
    """Oscillator kernel scale theta(t) = 4*pi*exp(-t)*sinh(t) = 2*pi*(1 - exp(-2t))."""
    t = _check_time(t)
    out = -2.0 * math.pi * np.expm1(-2.0 * t)
    return out if out.ndim else float(out)


def gamma_profile(t):
    """Composite decay scale gamma(t) = sigma(t)*theta(t)."""
    return sigma_profile(t) * theta_profile(t)


@dataclass(frozen=True)
class TimeProfile:
    """The four scalar profiles at one time.

    Invariants: sigma, theta, gamma > 0 and 0 < omega < 1 for every t > 0
    (omega saturates to 1.0 in double precision beyond t ~ 37);
    gamma == sigma * theta exactly as computed.
    """

    t: float
    sigma: float
    theta: float
    gamma: float
    omega: float


def time_profiles(t: float) -> TimeProfile:
    """Evaluate all four profiles at a single time t > 0."""
    t = float(t)
    if not math.isfinite(t) or t <= 0.0:
        raise ValueError(f"time must be finite and > 0, got {t!r}")
    sigma = float(sigma_profile(t))
    theta = float(theta_profile(t))
    return TimeProfile(t=t, sigma=sigma, theta=theta, gamma=sigma * theta, omega=float(omega_profile(t)))


def _coth(t):
    return 1.0 / np.tanh(t)


def _csch(t):
    # 2 e^{-t} / (1 - e^{-2t}); stable at both ends (no overflow for large t).
    return 2.0 * np.exp(-t) / (-np.expm1(-2.0 * t))


def _pair(v, vp):
    """Broadcast a pair of points; the last axis is the coordinate axis.

    Scalars are one-dimensional points. Returns (|v|^2, |vp|^2, v.vp, n).
    """
    v = np.asarray(v, dtype=float)
    vp = np.asarray(vp, dtype=float)
    if v.ndim == 0 and vp.ndim == 0:
        return v * v, vp * vp, v * vp, 1
    v, vp = np.broadcast_arrays(np.atleast_1d(v), np.atleast_1d(vp))
    n = v.shape[-1]
    return (
        np.sum(v * v, axis=-1),
        np.sum(vp * vp, axis=-1),
        np.sum(v * vp, axis=-1),
        n,
    )


def harmonic_kernel(v, vp, t, n: int | None = None):
    """Oscillator semigroup kernel in velocity.

    K(v, v'; t) = theta(t)^{-n/2} * exp(-coth(t)/4 * (|v|^2 + |v'|^2)
                                        + cosech(t)/2 * v.v')

    (the theta^{-n/2} prefactor is the nt/2-compensated (4 pi sinh t)^{-n/2}
    form, stable for all t). Symmetric in (v, v'); strictly positive.
    """
    t = _check_time(t)
    v2, vp2, dot, n_in = _pair(v, vp)
    if n is not None and n != n_in:
        raise ValueError(f"points have dimension {n_in}, expected n={n}")
    expo = -0.25 * _coth(t) * (v2 + vp2) + 0.5 * _csch(t) * dot
    out = theta_profile(t) ** (-0.5 * n_in) * np.exp(expo)
    return out if np.ndim(out) else float(out)


def ho_heat_kernel_reference(x, y, t, n: int | None = None):
    """Heat kernel of -Laplacian + |x|^2 (cross-check oracle for harmonic_kernel).

    E(x, y; t) = (2 pi sinh 2t)^{-n/2} * exp(-coth(2t)/2 (|x|^2+|y|^2)
                                             + cosech(2t) x.y)
    """
    t = _check_time(t)
    x2, y2, dot, n_in = _pair(x, y)
    if n is not None and n != n_in:
        raise ValueError(f"points have dimension {n_in}, expected n={n}")
    expo = (
        -0.5 * _coth(2.0 * t) * (x2 + y2)
        + _csch(2.0 * t) * dot
        - 0.5 * n_in * np.log(2.0 * math.pi * np.sinh(2.0 * t))
    )
    out = np.exp(expo)
    return out if np.ndim(out) else float(out)


@dataclass(frozen=True)
class KernelPoint:
    """Arguments of the free kernel: output point (x, v), source point (xp, vp), time."""

    x: np.ndarray
    v: np.ndarray
    xp: np.ndarray
    vp: np.ndarray
    t: float

    def __post_init__(self):
        for name in ("x", "v", "xp", "vp"):
            arr = np.atleast_1d(np.asarray(getattr(self, name), dtype=float))
            if arr.ndim != 1 or not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be a finite coordinate vector")
            object.__setattr__(self, name, arr)
        n = self.x.size
        if n not in (1, 2, 3):
            raise CapabilityError(f"dimension must be 1, 2 or 3, got {n}")
        if any(getattr(self, name).size != n for name in ("v", "xp", "vp")):
            raise ValueError("x, v, xp, vp must share one dimension")
        if not (math.isfinite(self.t) and self.t > 0.0):
            raise ValueError("time must be finite and > 0")

    @property
    def n(self) -> int:
        return self.x.size


def free_kernel_values(x, v, xp, vp, t):
    """Free-propagator kernel, broadcasting over points (last axis = coordinates).

    F(x, v, x', v'; t) = (4 pi sigma(t))^{-n/2}
                         * exp(-|x - x' - omega(t)(v + v')|^2 / (4 sigma(t)))
                         * K(v, v'; t)

    Strictly positive; its supremum over all arguments is (4 pi gamma(t))^{-n/2},
    attained at v = v' = 0, x = x'.
    """
    t = _check_time(t)
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    xp = np.asarray(xp, dtype=float)
    vp = np.asarray(vp, dtype=float)
    scalar = max(x.ndim, v.ndim, xp.ndim, vp.ndim) == 0
    x, v, xp, vp = np.broadcast_arrays(
        np.atleast_1d(x), np.atleast_1d(v), np.atleast_1d(xp), np.atleast_1d(vp)
    )
    n = x.shape[-1]
    if n not in (1, 2, 3):
        raise CapabilityError(f"dimension must be 1, 2 or 3, got {n}")
    sigma = sigma_profile(t)
    omega = omega_profile(t)
    disp = x - xp - omega * (v + vp)
    expo = (
        -np.sum(disp * disp, axis=-1) / (4.0 * sigma)
        - 0.25 * _coth(t) * np.sum(v * v + vp * vp, axis=-1)
        + 0.5 * _csch(t) * np.sum(v * vp, axis=-1)
    )
    pref = (4.0 * math.pi * sigma) ** (-0.5 * n) * theta_profile(t) ** (-0.5 * n)
    out = pref * np.exp(expo)
    return float(out) if scalar or np.ndim(out) == 0 else out


def free_kernel(point: KernelPoint) -> float:
    """Free-propagator kernel at a single KernelPoint."""
    return float(free_kernel_values(point.x, point.v, point.xp, point.vp, point.t))


def fourier_factor(v, vp, xi, t):
    """Position-frequency factor of the free kernel.

    g_hat(v, v', xi; t) = exp(-i omega(t) (v + v').xi - |xi|^2 sigma(t))

    |g_hat| = exp(-|xi|^2 sigma(t)) <= 1, independent of v and v'. Separates as
    u1(v, xi) * u2(v', xi) * exp(-sigma |xi|^2), which is what the factorized
    propagation backend exploits.
    """
    t = _check_time(t)
    v = np.asarray(v, dtype=float)
    vp = np.asarray(vp, dtype=float)
    xi = np.asarray(xi, dtype=float)
    scalar = max(v.ndim, vp.ndim, xi.ndim) == 0
    v, vp, xi = np.broadcast_arrays(np.atleast_1d(v), np.atleast_1d(vp), np.atleast_1d(xi))
    phase = -omega_profile(t) * np.sum((v + vp) * xi, axis=-1)
    decay = -sigma_profile(t) * np.sum(xi * xi, axis=-1)
    out = np.exp(decay + 1j * phase)
    return complex(out) if scalar or np.ndim(out) == 0 else out


def maxwellian_sqrt(x, v, potential):
    """Square root of the equilibrium state.

    m(x, v) = (2 pi)^{-n/4} * exp(-(|v|^2/2 + V(x)) / 2)

    Even in v; the full flow annihilates it for the matching potential, and
    its square integrates in v to exp(-V(x)).
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    scalar = max(x.ndim, v.ndim) == 0
    x, v = np.atleast_1d(x), np.atleast_1d(v)
    n = x.shape[-1]
    v2 = np.sum(np.broadcast_to(v, np.broadcast_shapes(x.shape, v.shape)) ** 2, axis=-1)
    vx = potential.value(x)
    out = (2.0 * math.pi) ** (-0.25 * n) * np.exp(-0.5 * (0.5 * v2 + vx))
    if not np.all(np.isfinite(out)):
        raise ValueError("non-finite equilibrium value (check inputs and potential)")
    return float(out) if scalar or np.ndim(out) == 0 else out
