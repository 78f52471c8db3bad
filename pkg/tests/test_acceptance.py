"""Acceptance suite: one numbered check per release criterion.

Each test prints a single CRITERION line (visible with pytest -s or on
failure) and asserts the stated tolerance. Criterion 5 is split: the three
attainable fits in one test and the dimension-three long-window fit in its
own test, which fails by a finite-time offset of the exact profile (the
asymptotic law itself is verified further out in the regular analysis tests).
"""

import math
import warnings

import mpmath as mp
import numpy as np
import pytest

import kfprop as kp
from kfprop.analysis import LONG_TIME_WINDOW, SHORT_TIME_WINDOW
from kfprop.phase_space import NormRecord

mp.mp.dps = 50


def report(number, name, ok, detail=""):
    print(f"CRITERION {number:>3} {name:<42} {'PASS' if ok else 'FAIL'}  {detail}")
    return ok


def quiet(fn, *args, **kwargs):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return fn(*args, **kwargs)


def rel_l2(a: kp.Field, b: kp.Field) -> float:
    return kp.lp_norm(kp.Field(a.grid, a.values - b.values), 2) / kp.lp_norm(b, 2)


def refine_max_free_kernel(t: float) -> float:
    """Maximize the n=1 free kernel over (x - x', v, v') by refining grid search."""
    lo = np.full(3, -1.0)
    hi = np.full(3, 1.0)
    best = 0.0
    for _ in range(6):
        axes = [np.linspace(lo[i], hi[i], 21) for i in range(3)]
        D, V, W = np.meshgrid(*axes, indexing="ij")
        vals = kp.free_kernel_values(
            D[..., None], V[..., None], np.zeros_like(D)[..., None], W[..., None], t
        )
        i = np.unravel_index(np.argmax(vals), vals.shape)
        best = float(vals[i])
        center = np.array([D[i], V[i], W[i]])
        span = (hi - lo) / 8
        lo, hi = center - span, center + span
    return best


def test_criterion_01_kernel_supremum_equality():
    worst = 0.0
    for t in (0.1, 1.0, 5.0):
        target = float(kp.free_norm_1_to_inf(t, 1))
        found = refine_max_free_kernel(t)
        worst = max(worst, abs(found / target - 1.0))
        assert found <= target * (1 + 1e-10)
        # tensor identity carries the n=1 result to n=3
        assert kp.free_norm_1_to_inf(t, 3) == pytest.approx(target**3, rel=1e-12)
        p1 = kp.free_kernel_values(0.2, 0.1, -0.1, 0.3, t)
        p3 = kp.free_kernel_values(
            [0.2, 0.2, 0.2], [0.1, 0.1, 0.1], [-0.1, -0.1, -0.1], [0.3, 0.3, 0.3], t
        )
        assert p3 == pytest.approx(p1**3, rel=1e-12)
    ok = worst <= 1e-6
    assert report(1, "kernel supremum equality", ok, f"max rel dev {worst:.2e}")


def test_criterion_02_semigroup_composition():
    grid = kp.PhaseGrid.box(1, 8.0, 128, 8.0, 96)
    x, v = grid.mesh()
    f = kp.Field(grid, np.exp(-(x**2) - (v - 0.4) ** 2 / 2) + 0.5 * np.exp(-((x + 1) ** 2) - v**2 / 3))
    worst = 0.0
    for t, s in ((0.5, 0.5), (0.2, 1.0)):
        two = quiet(kp.free_step_fourier, quiet(kp.free_step_fourier, f, t), s)
        one = quiet(kp.free_step_fourier, f, t + s)
        worst = max(worst, rel_l2(two, one))
    ok = worst < 1e-5
    assert report(2, "semigroup composition", ok, f"max rel L2 dev {worst:.2e}")


def test_criterion_03_spectral_structure():
    vgrid = kp.VelocityGrid.box(1, 12.0, 480)
    worst_eig = 0.0
    worst_bi = 0.0
    for xv in (0.0, 0.5, 1.0):
        for alpha in kp.spectral.multi_indices(1, 6):
            psi = kp.shifted_eigenfunction(alpha, [xv], vgrid)
            lhs = kp.apply_p0_hat([xv], psi.values, vgrid)
            resid = np.linalg.norm(lhs - psi.eigenvalue * psi.values) / np.linalg.norm(psi.values)
            worst_eig = max(worst_eig, float(resid))
        m = kp.biorthogonality_matrix([xv], 6, vgrid)
        worst_bi = max(worst_bi, float(np.abs(m - np.eye(m.shape[0])).max()))
    ok = worst_eig < 1e-5 and worst_bi < 1e-8
    assert report(3, "spectral structure", ok, f"eig {worst_eig:.2e} biorth {worst_bi:.2e}")


def test_criterion_04_marginal_identity():
    grid = kp.PhaseGrid.box(1, 10.0, 192, 9.0, 96)
    x, v = grid.mesh()
    f = kp.Field(grid, np.exp(-((x - 0.5) ** 2) - (v - 0.3) ** 2 / 2))
    worst = 0.0
    for t in (0.5, 2.0):
        for step in (kp.free_step_fourier, kp.free_step_direct):
            out = quiet(step, f, t)
            lhs = kp.x_marginal(out)
            rhs = kp.harmonic_step(kp.x_marginal(f), grid.velocity_grid(), t)
            worst = max(worst, float(np.abs(lhs - rhs).sum() / np.abs(rhs).sum()))
    ok = worst < 1e-6
    assert report(4, "marginal identity", ok, f"max rel L1 dev {worst:.2e}")


def _slope(ts, n):
    vals = kp.free_norm_1_to_inf(ts, n)
    recs = [NormRecord(1.0, math.inf, float(t), float(v), None, "operator_norm_exact")
            for t, v in zip(ts, vals)]
    return kp.fit_decay_exponent(recs, (ts[0], ts[-1])).fitted_exponent


def test_criterion_05a_free_decay_exponents():
    long_ts = np.geomspace(*LONG_TIME_WINDOW, 25)
    short_ts = np.geomspace(*SHORT_TIME_WINDOW, 25)
    results = {
        ("long", 1): (_slope(long_ts, 1), -0.5, 0.05),
        ("short", 1): (_slope(short_ts, 1), -2.0, 0.1),
        ("short", 3): (_slope(short_ts, 3), -6.0, 0.1),
    }
    ok = all(abs(got - want) <= tol for got, want, tol in results.values())
    detail = " ".join(f"{k[0]}/n={k[1]}:{v[0]:.3f}" for k, v in results.items())
    assert report("5a", "free decay exponents (3 of 4)", ok, detail)


def test_criterion_05b_free_decay_exponent_long_time_n3():
    # stated window [20, 50], stated tolerance -1.5 +- 0.05; the exact profile
    # carries a t-2 offset there, so the local slope is -(3/2) t/(t-2),
    # below -1.5625 everywhere on the window
    long_ts = np.geomspace(*LONG_TIME_WINDOW, 25)
    got = _slope(long_ts, 3)
    ok = abs(got - (-1.5)) <= 0.05
    report("5b", "free decay exponent long/n=3", ok, f"fitted {got:.4f} vs -1.5 +- 0.05")
    assert ok, (
        f"fitted slope {got:.4f} on t in [20, 50] cannot reach -1.5 +- 0.05: "
        "the least-squares slope averages -(3/2)t/(t-2) <= -1.5625 on this window "
        "(see the regular analysis test for the law holding on [100, 500])"
    )


def test_criterion_06_contraction_and_positivity():
    grid = kp.PhaseGrid.box(1, 16.0, 256, 10.0, 160)
    pot = kp.InversePowerPotential(0.5, 2.0)
    x, v = grid.mesh()
    m = kp.maxwellian_field(grid, pot)
    u0 = kp.Field(grid, m.values + np.exp(-(x**2) - v**2 / 4))
    plan = kp.PropagatorPlan(dt=0.01, interpolation="linear")
    times = [0.25 * k for k in range(1, 17)]
    snaps = quiet(kp.evolve, u0, 4.0, pot, plan, times)
    worst_ratio = 0.0
    for p in (1.0, 2.0, math.inf):
        base = kp.lp_norm(u0, p)
        worst_ratio = max(worst_ratio, max(kp.lp_norm(s, p) for s in snaps) / base)
    pos_min = min(float(s.values.real.min()) for s in snaps)
    ok = worst_ratio <= 1 + 1e-4 and pos_min >= -1e-14
    assert report(6, "contraction and positivity", ok,
                  f"max norm ratio {worst_ratio:.6f} positivity min {pos_min:.2e}")


def test_criterion_07_stationarity_and_conservation():
    grid = kp.PhaseGrid.box(1, 16.0, 256, 10.0, 160)
    pot = kp.InversePowerPotential(0.5, 2.0)
    m = kp.maxwellian_field(grid, pot)
    plan = kp.PropagatorPlan(dt=0.01, interpolation="cubic")
    snap = quiet(kp.evolve, m, 1.0, pot, plan, [1.0])[0]
    resid = rel_l2(snap, m)

    x, v = grid.mesh()
    u0 = kp.Field(grid, np.exp(-(x**2) - v**2 / 4))
    mass0 = kp.pairing(m, u0).real
    snaps = quiet(kp.evolve, u0, 2.0, pot, plan, [0.5, 1.0, 1.5, 2.0])
    drift = max(abs(kp.pairing(m, s).real - mass0) / abs(mass0) for s in snaps)
    ok = resid < 1e-3 and drift < 1e-4
    assert report(7, "stationarity and conservation", ok,
                  f"stationarity {resid:.2e} mass drift {drift:.2e}")


def test_criterion_08_first_order_coupling_expansion():
    grid = kp.PhaseGrid.box(1, 12.0, 192, 8.0, 256)
    x, v = grid.mesh()
    u0 = kp.Field(grid, np.exp(-(x**2) - v**2 / 4))
    t = 1.0
    errs = []
    for c in (0.1, 0.05, 0.025):
        pot = kp.InversePowerPotential(c, 2.0)
        plan = kp.PropagatorPlan(dt=0.005, interpolation="cubic")
        ref = quiet(kp.evolve, u0, t, pot, plan, [t])[0]
        approx = quiet(kp.free_step_fourier, u0, t).values + quiet(
            kp.born_term, u0, t, pot, 96
        ).values
        errs.append(kp.lp_norm(kp.Field(grid, ref.values - approx), 2))
    r1, r2 = errs[0] / errs[1], errs[1] / errs[2]
    ok = 3.4 <= r1 <= 4.6 and 3.4 <= r2 <= 4.6
    assert report(8, "first-order coupling expansion", ok, f"ratios {r1:.2f} {r2:.2f}")


def test_criterion_09_rate_bootstrap():
    ok = True
    details = []
    for rho in (1.01, 1.1, 1.2, math.sqrt(1.5) + 1e-6, 1.5):
        trace = kp.bootstrap_exponents(rho)
        ok &= trace.iterates[0] == 2.0 * rho**2 / 3.0
        ok &= trace.terminated_at is not None
        ok &= trace.iterates[trace.terminated_at - 1] > 1.0
        if rho < 1.5:
            ell = rho / (3.0 - 2.0 * rho)
            ok &= all(r < ell for r in trace.iterates)
        details.append(f"rho={rho:.4g}:k={trace.terminated_at}")
    assert report(9, "rate bootstrap recursion", ok, " ".join(details))


def test_criterion_10_small_time_stability():
    worst = 0.0
    for t in (1e-4, 1e-3, 1e-2):
        tt = mp.mpf(t)
        sig = float(tt - 2 * mp.coth(tt) + 2 * mp.csch(tt))
        om = float(mp.coth(tt) - mp.csch(tt))
        worst = max(
            worst,
            abs(kp.sigma_profile(t) / sig - 1.0),
            abs(kp.omega_profile(t) / om - 1.0),
        )
    const = kp.sigma_profile(1e-3) / 1e-3**3
    dev_exact = abs(const - 1.0 / 12.0)
    dev_quoted = abs(const - 1.0 / 6.0)
    ok = worst < 1e-10 and dev_exact < 1e-6 and dev_quoted > 0.05
    assert report(
        10, "small-time stability", ok,
        f"oracle dev {worst:.2e}; sigma/t^3 = {const:.9f} "
        f"(1/12 dev {dev_exact:.1e}, 1/6 dev {dev_quoted:.2f})",
    )
