"""Operator-norm estimation, decay-exponent fitting, and the rate bootstrap.

The free 1 -> infinity norm is exact: the positive kernel attains its supremum
(4 pi gamma(t))^{-n/2}, so that value IS the operator norm. All other operator
norms are reported as certified lower bounds obtained by probing with test
families; together with the theoretical upper bounds they bracket the truth.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .phase_space import Field, NormRecord, PhaseGrid, lp_norm
from .potentials import Potential

REGIMES = ("short_time", "long_time")

# windows where the composite profile sits in its asymptotic regime
SHORT_TIME_WINDOW = (1e-3, 1e-2)
LONG_TIME_WINDOW = (20.0, 50.0)


def free_norm_1_to_inf(t, n: int = 1):
    """Exact L^1 -> L^inf norm of the free step: (4 pi gamma(t))^{-n/2}."""
    if n not in (1, 2, 3):
        raise ValueError("dimension must be 1, 2 or 3")
    g = kernels.gamma_profile(t)
    out = (4.0 * math.pi * np.asarray(g)) ** (-0.5 * n)
    return out if np.ndim(out) else float(out)


def expected_exponent(p, q, n: int, regime: str) -> float:
    """Theoretical decay rate of the p -> q norm in the given time regime.

    Long time the norm falls like t^{-rate} with rate = n/2 (1/p - 1/q); short
    time it blows up like t^{-rate} with rate = 2n (1/p - 1/q) (the composite
    profile scales like t^4 there). Returned as the positive rate.
    """
    p, q = float(p), float(q)
    if not (1.0 <= p <= q):
        raise ValueError("need 1 <= p <= q")
    if regime not in REGIMES:
        raise ValueError(f"regime must be one of {REGIMES}")
    inv_gap = (1.0 / p) - (0.0 if np.isinf(q) else 1.0 / q)
    if regime == "long_time":
        return 0.5 * n * inv_gap
    return 2.0 * n * inv_gap


@dataclass(frozen=True)
class DecayFit:
    """Least-squares log-log slope of norm records against time."""

    regime: str
    p: float
    q: float
    fitted_exponent: float  # slope of log(value) vs log(t); negative for decay
    expected_exponent: float | None  # comparable slope (-rate), when regime/n known
    r2: float
    time_window: tuple

    def __post_init__(self):
        if self.time_window[0] >= self.time_window[1]:
            raise ValueError("window must satisfy t_min < t_max")


def fit_decay_exponent(records, window, regime: str | None = None, n: int | None = None) -> DecayFit:
    """Fit log(value) ~ slope * log(t) over the records inside the window."""
    t_min, t_max = float(window[0]), float(window[1])
    inside = [r for r in records if t_min <= r.t <= t_max]
    if len(inside) < 5:
        raise ValueError(f"need at least 5 records inside the window, got {len(inside)}")
    if any(r.value <= 0 for r in inside):
        raise ValueError("all record values must be positive for a log-log fit")
    if len({r.p for r in inside}) != 1 or len({r.q for r in inside}) != 1:
        raise ValueError("records mix (p, q) pairs")
    p0, q0 = inside[0].p, inside[0].q
    logt = np.log([r.t for r in inside])
    logv = np.log([r.value for r in inside])
    slope, intercept = np.polyfit(logt, logv, 1)
    pred = slope * logt + intercept
    ss_res = float(np.sum((logv - pred) ** 2))
    ss_tot = float(np.sum((logv - logv.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else max(0.0, 1.0 - ss_res / ss_tot)
    expected = None
    if regime is not None and n is not None:
        expected = -expected_exponent(p0, q0, n, regime)
    return DecayFit(
        regime=regime or ("short_time" if t_max <= 1.0 else "long_time"),
        p=p0,
        q=q0,
        fitted_exponent=float(slope),
        expected_exponent=expected,
        r2=r2,
        time_window=(t_min, t_max),
    )


def default_test_family(
    grid: PhaseGrid, p, q=None, seed: int = 0, jitter: float = 0.0
) -> list[Field]:
    """Gaussian bumps at varied centers/widths, plus single-cell spikes for p = 1.

    Bump velocity profiles are kept at the equilibrium width or wider, and
    spikes are only included when probing p = 1 against a strictly larger q
    (a velocity-concentrated probe is the right extremizer for 1 -> infinity
    but does not respect the p = q comparator on this normalization).
    """
    rng = np.random.default_rng(seed)
    n = grid.n
    fields = []
    x_widths = (0.7, 1.2, 2.0)
    v_widths = (math.sqrt(2.0), 2.0, 2.8)
    centers = [0.0, -1.0, 1.5]
    mesh = grid.mesh()
    for wx, wv, c in zip(x_widths, v_widths, centers):
        cx = c + (jitter * rng.standard_normal() if jitter else 0.0)
        expo = 0.0
        for j in range(n):
            expo = expo - ((mesh[j] - cx) / wx) ** 2
        for j in range(n):
            expo = expo - (mesh[n + j] / wv) ** 2 / 2.0
        fields.append(Field(grid, np.exp(expo)))
    include_spikes = float(p) == 1.0 and q is not None and float(q) > 1.0
    if include_spikes:
        for cx, cv in ((0, 0), (1, 0), (0, 1)):
            values = np.zeros(grid.shape)
            idx = tuple(grid.x_points[j] // 2 + cx for j in range(n)) + tuple(
                grid.v_points[j] // 2 + cv for j in range(n)
            )
            values[idx] = 1.0 / grid.cell_volume
            fields.append(Field(grid, values))
    return fields


def norm_lower_bound(propagate, p, q, family, t: float | None = None) -> NormRecord:
    """Certified lower bound of the p -> q operator norm from a test family.

    max over the family of ||T f||_q / ||f||_p; zero-norm members are skipped
    with a warning.
    """
    best = 0.0
    seen = 0
    for f in family:
        denom = lp_norm(f, p)
        if denom == 0.0:
            warnings.warn("skipping a zero-norm test function", stacklevel=2)
            continue
        seen += 1
        best = max(best, lp_norm(propagate(f), q) / denom)
    if seen == 0:
        raise ValueError("test family is empty (or all members have zero norm)")
    return NormRecord(
        p=float(p), q=float(q), t=float(t) if t is not None else math.nan,
        value=best, bound=None, kind="operator_norm_lower_bound",
    )


@dataclass(frozen=True)
class ConditionReport:
    """Observed short-range condition data for a potential."""

    c_measured: float
    rho_claimed: float
    passed: bool
    worst_radius: float


def potential_condition_check(
    potential: Potential, rho_claimed: float, probe_radius: float, samples: int = 512
) -> ConditionReport:
    """Sample <x>^rho (|V| + <x>|grad V|) on radial probes and report the sup.

    Fails when the samples are non-finite or keep growing toward the probe
    boundary (the claimed decay rate is then too optimistic).
    """
    if not probe_radius > 0:
        raise ValueError("probe_radius must be positive")
    r = np.concatenate(([0.0], np.geomspace(1e-3, probe_radius, samples - 1)))
    x = r[:, None]
    w = np.sqrt(1.0 + r * r)
    raw = np.abs(potential.value(x)) + w * np.abs(potential.gradient(x)[:, 0])
    vals = w**float(rho_claimed) * raw
    if not np.all(np.isfinite(vals)):
        bad = r[~np.isfinite(vals)][0]
        return ConditionReport(math.inf, rho_claimed, False, float(bad))
    c_meas = float(vals.max())
    worst = float(r[int(np.argmax(vals))])
    # growth detection: the outer decade must not exceed the rest
    outer = vals[r >= probe_radius / 10.0]
    inner = vals[r < probe_radius / 10.0]
    growing = outer.size and inner.size and float(outer.max()) > 1.05 * float(inner.max())
    return ConditionReport(c_meas, rho_claimed, not growing, worst)


@dataclass(frozen=True)
class BootstrapTrace:
    """Iterates of the decay-rate recursion r_k = rho (1 + 2 r_{k-1}) / 3."""

    rho: float
    iterates: tuple
    terminated_at: int | None  # first k (1-based) with r_k > 1, None if never reached
    fixed_point: float | None  # rho / (3 - 2 rho) when rho < 3/2

    @property
    def diverged(self) -> bool:
        return self.terminated_at is None


def bootstrap_exponents(rho: float, max_iter: int = 10_000) -> BootstrapTrace:
    """Run the rate recursion seeded with r_1 = 2 rho^2 / 3 until it passes 1.

    The sequence is strictly increasing while <= 1 and must escape past 1 for
    every rho > 1 (its only candidate limit rho/(3 - 2 rho) exceeds 1 there).
    """
    rho = float(rho)
    if not rho > 1.0:
        raise ValueError(f"rho must be > 1, got {rho}")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    fixed_point = rho / (3.0 - 2.0 * rho) if rho < 1.5 else None
    r = 2.0 * rho**2 / 3.0
    iterates = [r]
    k = 1
    while r <= 1.0 and k < max_iter:
        r = rho * (1.0 + 2.0 * r) / 3.0
        iterates.append(r)
        k += 1
    terminated = k if r > 1.0 else None
    return BootstrapTrace(rho, tuple(iterates), terminated, fixed_point)


def stationarity_residual(potential: Potential, grid: PhaseGrid) -> float:
    """Relative L^2 residual of the discretized generator on the equilibrium state.

    Applies -Laplacian_v + |v|^2/4 - n/2 + v.grad_x - grad V.grad_v with
    2nd-order centered differences to the equilibrium square root built for the
    same potential; converges to 0 like the spacing squared.
    """
    if max(grid.v_spacings) > 0.1:
        raise ValueError(
            f"velocity spacing {max(grid.v_spacings):.3g} does not resolve the "
            "equilibrium state (need <= 0.1)"
        )
    n = grid.n
    mesh = grid.mesh()
    xmesh_full = np.meshgrid(*(grid.x_nodes(j) for j in range(n)), indexing="ij")
    xstack = np.stack(xmesh_full, axis=-1)
    vx = np.asarray(potential.value(xstack.reshape(-1, n))).reshape(xstack.shape[:-1])
    v2 = sum(np.asarray(mesh[n + j]) ** 2 for j in range(n))
    m = (2.0 * math.pi) ** (-0.25 * n) * np.exp(
        -0.5 * (0.5 * v2 + vx.reshape(grid.x_points + (1,) * n))
    )
    m = m + np.zeros(grid.shape)

    out = np.zeros(grid.shape)
    # -Laplacian_v: 3-point stencil, zero extension (the state decays in v)
    for j in range(n):
        h = grid.v_spacings[j]
        pad = [(0, 0)] * m.ndim
        pad[n + j] = (1, 1)
        mp = np.pad(m, pad)
        sl = lambda k: tuple(
            slice(k, k + m.shape[a]) if a == n + j else slice(None) for a in range(m.ndim)
        )
        out -= (mp[sl(2)] - 2.0 * m + mp[sl(0)]) / h**2
    out += (0.25 * v2 - 0.5 * n) * m
    grad = np.asarray(potential.gradient(xstack.reshape(-1, n))).reshape(xstack.shape)
    for j in range(n):
        dmdx = np.gradient(m, grid.x_spacings[j], axis=j)
        out += np.asarray(mesh[n + j]) * dmdx
        dmdv = np.gradient(m, grid.v_spacings[j], axis=n + j)
        out -= grad[..., j].reshape(grid.x_points + (1,) * n) * dmdv
    return float(np.sqrt(np.sum(out * out)) / np.sqrt(np.sum(m * m)))
