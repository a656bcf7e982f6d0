import numpy as np
import pytest

from cournotmfe import (
    best_response,
    equilibrium_bounds,
    inverse_demand,
    solve_cdf_coeffs,
    solve_equilibrium,
    solve_roots,
    solve_thresholds,
)

from conftest import draw_params


@pytest.fixture(scope="module")
def eq(baseline):
    return solve_equilibrium(baseline)


def test_fixed_point_residual(baseline, eq):
    assert eq.residual < 1e-8
    br = best_response(baseline, eq.Q_star)
    scale = max(eq.Q_star)
    assert max(abs(br.means[0] - eq.Q_star[0]),
               abs(br.means[1] - eq.Q_star[1])) < 1e-7 * scale


def test_equilibrium_internal_consistency(baseline, eq):
    # prices, thresholds and law must all be the ones implied by Q*
    eta = inverse_demand(baseline, eq.Q_star)
    assert eta == pytest.approx(eq.eta_star, rel=1e-12)
    sol = solve_thresholds(baseline, eta, eq.roots)
    assert sol.a1 == pytest.approx(eq.a_star[0], rel=1e-10)
    assert sol.a2 == pytest.approx(eq.a_star[1], rel=1e-10)
    law = solve_cdf_coeffs(baseline, sol, eq.roots)
    assert law.conditional_mean(1) == pytest.approx(eq.Q_star[0], rel=1e-7)
    assert law.conditional_mean(2) == pytest.approx(eq.Q_star[1], rel=1e-7)


def test_bounds_box(baseline, eq):
    bounds = eq.bounds
    assert bounds.Q_low[0] <= bounds.Q_high[0]
    assert bounds.Q_low[1] <= bounds.Q_high[1]
    for i in (1, 2):
        assert bounds.Q_low[i - 1] <= eq.Q_star[i - 1] <= bounds.Q_high[i - 1]
        # floor thresholds sit below the zero-profit capacity level
        hurdle = (baseline.varphi(i) - (baseline.rho + baseline.delta)) / (
            2.0 * baseline.c
        )
        assert bounds.a_low[i - 1] < hurdle
    # the box construction never used a trial Q: recomputation is identical
    again = equilibrium_bounds(baseline)
    assert again.Q_low == pytest.approx(bounds.Q_low, rel=1e-12)
    assert again.Q_high == pytest.approx(bounds.Q_high, rel=1e-12)


def test_best_response_maps_box_into_itself(baseline, eq):
    rng = np.random.default_rng(11)
    roots = eq.roots
    lo = np.array(eq.bounds.Q_low)
    hi = np.array(eq.bounds.Q_high)
    for _ in range(5):
        Q = lo + rng.random(2) * (hi - lo)
        means = np.array(best_response(baseline, tuple(Q), roots).means)
        assert np.all(means >= lo * (1 - 1e-9))
        assert np.all(means <= hi * (1 + 1e-9))


def test_best_response_antitone(baseline, eq):
    roots = eq.roots
    rng = np.random.default_rng(3)
    for _ in range(5):
        Q = np.array(eq.bounds.Q_low) * (1.0 + rng.random(2))
        Qbig = Q * (1.0 + rng.random(2))
        r_small = np.array(best_response(baseline, tuple(Q), roots).means)
        r_big = np.array(best_response(baseline, tuple(Qbig), roots).means)
        assert np.all(r_big <= r_small + 1e-10)


def test_symmetric_best_response_equal(symmetric):
    roots = solve_roots(symmetric)
    br = best_response(symmetric, (25.0, 25.0), roots)
    assert br.means[0] == pytest.approx(br.means[1], rel=1e-12)


def test_composed_map_isotone(baseline, eq):
    """The twice-applied best response preserves the componentwise order,
    which is what makes the corner sequences monotone brackets."""
    roots = eq.roots
    T = lambda Q: best_response(
        baseline, best_response(baseline, Q, roots).means, roots
    ).means
    lo = np.array(eq.bounds.Q_low)
    hi = np.array(eq.bounds.Q_high)
    rng = np.random.default_rng(17)
    for _ in range(4):
        Qa = lo + rng.random(2) * (hi - lo)
        Qb = Qa + rng.random(2) * (hi - Qa)
        Ta, Tb = np.array(T(tuple(Qa))), np.array(T(tuple(Qb)))
        assert np.all(Tb >= Ta - 1e-10)


def test_uniqueness_probe_multiple_starts(baseline, eq):
    """Plain damped iteration from different interior points lands on the
    same fixed point the bracket certified."""
    roots = eq.roots
    for start in (eq.bounds.Q_low, eq.bounds.Q_high,
                  tuple(0.3 * np.array(eq.bounds.Q_low)
                        + 0.7 * np.array(eq.bounds.Q_high))):
        Q = np.array(start, dtype=float)
        for _ in range(200):
            means = np.array(best_response(baseline, tuple(Q), roots).means)
            if np.max(np.abs(means - Q)) < 1e-9 * np.max(Q):
                break
            Q = 0.5 * Q + 0.5 * means
        assert np.allclose(Q, eq.Q_star, rtol=1e-6)
    assert eq.bracket_width < 1e-8


def test_trace_records_progress(eq):
    assert len(eq.trace) == eq.iterations
    widths = [t["width"] for t in eq.trace if "width" in t]
    assert widths[-1] < widths[0]


def test_random_equilibria_consistency():
    rng = np.random.default_rng(99)
    done = 0
    while done < 6:
        params = draw_params(rng, solvable=True)
        eq = solve_equilibrium(params)
        assert eq.residual < 1e-8
        assert eq.theta2 < -1.0
        assert eq.Q_star[0] > 0 and eq.Q_star[1] > 0
        done += 1


def test_summary_fields(eq):
    s = eq.summary()
    for key in ("Q1_star", "Q2_star", "a1_star", "a2_star", "theta2",
                "residual", "iterations"):
        assert key in s
