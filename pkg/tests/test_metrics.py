import numpy as np
import pytest
from scipy.integrate import quad

from cournotmfe import (
    DivergentMomentError,
    concentration,
    elasticities,
    gini_index,
    lorenz_share,
    solve_equilibrium,
    symmetric_base_params,
    v_star,
    value_functions,
)

from oracles import discrete_gini, sample_from_law


@pytest.fixture(scope="module")
def eq(baseline):
    return solve_equilibrium(baseline)


@pytest.fixture(scope="module")
def report(baseline, eq):
    return concentration(baseline, eq, curve_points=49)


def test_moments_and_ratio(baseline, eq, report):
    law = eq.law
    mean = law.moment(1.0)
    second = law.moment(2.0)
    assert report.mean == pytest.approx(mean, rel=1e-12)
    assert report.variance == pytest.approx(second - mean**2, rel=1e-10)
    assert report.ratio == pytest.approx(report.variance / mean**2, rel=1e-12)
    assert not report.variance_divergent
    # quadrature oracle for the variance path
    brute = quad(
        lambda z: np.exp(2 * z) * (law.pdf(np.exp(z), 1) + law.pdf(np.exp(z), 2))
        * np.exp(z),
        np.log(law.a_low), np.log(law.a_high) + 60 / abs(law.tail.theta2),
        limit=800,
    )[0]
    assert second == pytest.approx(brute, rel=1e-8)


def test_gini_curve_properties(report):
    assert np.all(report.gini_curve > 0.0)
    assert np.all(report.gini_curve < 1.0)
    assert np.all(np.diff(report.gini_curve) >= -1e-12)
    # capacity share of firms below quantile q never exceeds q
    assert np.all(report.gini_curve <= report.gini_q + 1e-12)
    assert 0.0 < report.gini_H < 0.5


def test_gini_against_quantile_grid(eq, report):
    """Direct trapezoid over the quantile-domain curve agrees with the
    substitution-based quadrature."""
    law = eq.law
    qs = np.linspace(0.002, 0.998, 499)
    curve = np.array([lorenz_share(law, q) for q in qs])
    h_trap = np.trapezoid(qs - curve, qs)
    assert report.gini_H == pytest.approx(h_trap, abs=2e-3)


def test_gini_matches_sampled_population(eq):
    law = eq.law
    rng = np.random.default_rng(2718)
    batches = [
        discrete_gini(sample_from_law(law, 200_000, rng)) for _ in range(5)
    ]
    mc = np.mean(batches)
    se = np.std(batches, ddof=1) / np.sqrt(len(batches))
    assert abs(gini_index(law) - mc) < 3.0 * se + 1e-4


def test_fragmented_limit(baseline):
    """Tiny volatility and rare switching collapse the law to a point mass:
    both concentration measures vanish."""
    params = symmetric_base_params(sigma=0.02, p=0.05, varphi=10.0)
    eqp = solve_equilibrium(params)
    rep = concentration(params, eqp, curve_points=19)
    assert rep.ratio < 1e-3
    assert rep.gini_H < 1e-2


def test_v_star_positive_and_tail_correction(baseline, eq):
    vs = v_star(baseline, eq)
    assert vs > 0.0
    vf = value_functions(baseline, eq.eta_star, eq.thresholds)
    law = eq.law

    def integrand(z):
        x = np.exp(z)
        return (vf.V(x, 1) * law.pdf(x, 1) + vf.V(x, 2) * law.pdf(x, 2)) * x

    brute = (
        quad(integrand, np.log(law.a_low), np.log(law.a_high), limit=400)[0]
        + quad(integrand, np.log(law.a_high), np.log(1e6 * law.a_high),
               limit=800)[0]
    )
    assert vs == pytest.approx(brute, rel=1e-6)


def test_v_star_integrand_positive_on_bulk(baseline, eq):
    """V is positive where the stationary mass lives (it eventually turns
    negative far out, where quadratic running costs dominate, but the law
    puts essentially no weight there), so the aggregate value is positive."""
    vf = value_functions(baseline, eq.eta_star, eq.thresholds)
    xs = np.geomspace(eq.law.a_low, eq.law.quantile(0.99), 100)
    for i in (1, 2):
        assert np.all(vf.V(xs, i) > 0.0)
    assert v_star(baseline, eq) > 0.0


def test_v_star_divergение_raises():
    """With 2 + theta2 >= 0 the quadratic growth of V beats the tail."""
    params = symmetric_base_params(sigma=0.4, p=0.1, varphi=10.0,
                                   rho=0.4, delta=0.05)
    eqp = solve_equilibrium(params)
    assert -2.0 < eqp.theta2 < -1.0
    with pytest.raises(DivergentMomentError):
        v_star(params, eqp)
    # the concentration report flags the variance instead of failing
    rep = concentration(params, eqp, curve_points=9)
    assert rep.variance_divergent
    assert np.isnan(rep.variance)
    assert 0.0 < rep.gini_H < 0.5  # first-moment index still fine


def test_elasticities_require_symmetric_base(baseline):
    with pytest.raises(ValueError, match="symmetric"):
        elasticities(baseline)


def test_elasticity_signs_and_symmetry_zero():
    base = symmetric_base_params(sigma=0.15, p=0.1, varphi=8.0)
    rep = elasticities(base, rel_step=2e-3, richardson=False)
    assert abs(rep.chi_p1) < 1e-3   # switching rate is payoff-irrelevant here
    assert rep.chi_sigma1 > 0.0     # calmer good state raises value
    assert rep.chi_varphi1 > 0.0    # higher price level raises value
    assert rep.v_star_base > 0.0
