import numpy as np
import pytest

from cournotmfe import (
    SimConfig,
    chain_stationary,
    corridor_stats,
    effective_samples,
    inverse_demand,
    simulate,
    solve_cdf_coeffs,
    solve_equilibrium,
    solve_roots,
    solve_thresholds,
)


@pytest.fixture(scope="module")
def eq(baseline):
    return solve_equilibrium(baseline)


def quiet_params(baseline):
    return baseline.replace(sigma1=1e-12, sigma2=1e-12, p1=1e-12, p2=1e-12)


def test_zero_noise_decay_to_barrier(baseline):
    params = quiet_params(baseline)
    cfg = SimConfig(barriers=(5.0, 5.0), horizon=30.0, dt=0.01, n_paths=2,
                    seed=1, burn_in=0.0, x0=20.0, record_stride=1,
                    store_paths=1)
    stats = simulate(params, cfg)
    tr = stats.trajectories
    exact = np.maximum(20.0 * np.exp(-params.delta * tr["t"]), 5.0)
    assert np.max(np.abs(tr["X"][0] - exact) / exact) < 1e-10
    assert np.all(np.diff(tr["I"][0]) >= 0.0)  # investment is cumulative


def test_lump_jump_to_higher_barrier(baseline):
    """Starting below the active barrier triggers an immediate lump-sum."""
    params = quiet_params(baseline)
    cfg = SimConfig(barriers=(8.0, 2.0), horizon=1.0, dt=0.01, n_paths=1,
                    seed=0, burn_in=0.0, x0=1.0, i0=1, record_stride=1,
                    store_paths=1)
    stats = simulate(params, cfg)
    assert stats.trajectories["X"][0, 0] == pytest.approx(8.0, rel=1e-9)
    # initial jump to the barrier plus one step of depreciation compensation
    expected_I = np.log(8.0) + params.delta * cfg.dt
    assert stats.trajectories["I"][0, 0] == pytest.approx(expected_I, rel=1e-9)


def test_reflection_invariant_and_reproducibility(baseline, eq):
    cfg = SimConfig(barriers=eq.a_star, horizon=60.0, dt=0.02, n_paths=300,
                    seed=123, burn_in=0.2, record_stride=10)
    s1 = simulate(baseline, cfg)
    s2 = simulate(baseline, cfg)
    assert s1.max_reflection_violation == 0.0
    assert np.array_equal(s1.hist, s2.hist)
    assert s1.cond_means == s2.cond_means
    s3 = simulate(baseline, SimConfig(**{**cfg.__dict__, "seed": 124}))
    assert not np.array_equal(s1.hist, s3.hist)


def test_occupation_matches_chain(baseline, eq):
    pi = chain_stationary(baseline)
    cfg = SimConfig(barriers=eq.a_star, horizon=400.0, dt=0.25, n_paths=2000,
                    seed=5, burn_in=0.25, record_stride=4, scheme="bridge")
    stats = simulate(baseline, cfg)
    # regime indicator variance pi1*pi2, decorrelation time ~ 1/(p1+p2)
    n_eff = cfg.n_paths * cfg.horizon * (1 - cfg.burn_in) * (
        baseline.p1 + baseline.p2
    ) / 2.0
    se = np.sqrt(pi.pi1 * pi.pi2 / n_eff)
    assert abs(stats.occupancy[0] - pi.pi1) < 3.0 * se


def test_bridge_matches_analytic_law(baseline, eq):
    cfg = SimConfig(barriers=eq.a_star, horizon=300.0, dt=0.25, n_paths=4000,
                    seed=42, burn_in=0.2, record_stride=4, scheme="bridge")
    stats = simulate(baseline, cfg)
    law = eq.law
    assert stats.ks_marginal(law) < 0.01
    for i in (1, 2):
        rel = abs(stats.cond_means[i - 1] / law.conditional_mean(i) - 1.0)
        assert rel < 0.02
        # within 4 between-path standard errors of the closed form
        assert (
            abs(stats.cond_means[i - 1] - law.conditional_mean(i))
            < 4.0 * stats.cond_mean_ses[i - 1] + 1e-12
        )


def test_dt_invariance_of_bridge_scheme(baseline, eq):
    """The exact reflection step makes recorded laws dt-independent; halving
    dt moves the conditional means by sampling noise only."""
    common = dict(barriers=eq.a_star, horizon=150.0, n_paths=1500,
                  burn_in=0.2, scheme="bridge")
    s_a = simulate(baseline, SimConfig(dt=0.5, record_stride=2, seed=21, **common))
    s_b = simulate(baseline, SimConfig(dt=0.25, record_stride=4, seed=22, **common))
    for i in (0, 1):
        se = np.hypot(s_a.cond_mean_ses[i], s_b.cond_mean_ses[i])
        assert abs(s_a.cond_means[i] - s_b.cond_means[i]) < 3.5 * se


def test_projection_bias_shrinks_with_dt(baseline, eq):
    """Projected Euler sits below the continuous law by O(sqrt(dt))."""
    law = eq.law
    target = law.conditional_mean(1)
    errs = []
    for dt, seed in ((0.04, 31), (0.0025, 32)):
        cfg = SimConfig(barriers=eq.a_star, horizon=250.0, dt=dt,
                        n_paths=1500, seed=seed, burn_in=0.2,
                        record_stride=max(1, int(0.5 / dt)))
        stats = simulate(baseline, cfg)
        errs.append(target - stats.cond_means[0])
    assert errs[0] > 0.0  # discrete reflection undershoots
    assert errs[1] < 0.6 * errs[0]


def test_corridor_stats_dispatch(baseline, eq, symmetric):
    law = eq.law
    p_an, chi_an = corridor_stats(law)
    cfg = SimConfig(barriers=eq.a_star, horizon=300.0, dt=0.25, n_paths=3000,
                    seed=9, burn_in=0.2, record_stride=4, scheme="bridge")
    stats = simulate(baseline, cfg)
    p_mc, chi_mc = corridor_stats(stats)
    assert abs(p_mc - p_an) < 0.01
    assert abs(chi_mc - chi_an) < 0.01
    with pytest.raises(TypeError):
        corridor_stats(42)
    # empty corridor when both thresholds coincide
    sym_eq = solve_equilibrium(symmetric)
    p0, chi0 = corridor_stats(sym_eq.law)
    assert p0 == 0.0 and chi0 == 0.0


def test_config_validation(baseline):
    with pytest.raises(ValueError):
        SimConfig(barriers=(1.0, 1.0), horizon=1.0, dt=0.0).validated()
    with pytest.raises(ValueError):
        SimConfig(barriers=(1.0, 1.0), horizon=1.0, burn_in=1.0).validated()
    with pytest.raises(ValueError):
        SimConfig(barriers=(0.0, 1.0), horizon=1.0).validated()
    with pytest.raises(ValueError):
        SimConfig(barriers=(1.0, 1.0), horizon=1.0, scheme="exact").validated()
    with pytest.raises(ValueError):
        SimConfig(barriers=(1.0, 1.0), horizon=1.0, x0=-2.0).validated()


def test_effective_samples_estimate(baseline):
    cfg = SimConfig(barriers=(1.0, 1.0), horizon=100.0, n_paths=10,
                    burn_in=0.2)
    n = effective_samples(baseline, cfg)
    tau = 2.0 * (1.0 / baseline.delta + 1.0 / (baseline.p1 + baseline.p2))
    assert n == pytest.approx(10 * 80.0 / tau)
