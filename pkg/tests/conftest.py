import numpy as np
import pytest

from cournotmfe import ModelParams, solve_roots
from cournotmfe.errors import ThresholdSolveError


@pytest.fixture(scope="session")
def baseline():
    """Two-regime benchmark set: cheap regime 2, volatile regime 1."""
    return ModelParams(
        delta=0.1, rho=0.08, kappa=10.0, c=0.1, alpha=0.5,
        sigma1=0.2, sigma2=0.15, p1=0.1, p2=0.2,
        varphi1=10.0, varphi2=5.0, zeta1=1.0, zeta2=1.0,
    )


@pytest.fixture(scope="session")
def equal_price(baseline):
    """Same price level in both regimes; the volatility gap drives everything."""
    return baseline.replace(varphi2=10.0)


@pytest.fixture(scope="session")
def symmetric(baseline):
    """Fully symmetric regimes (the degenerate equal-threshold case)."""
    return baseline.replace(sigma2=0.2, p2=0.1, varphi2=10.0)


def draw_params(rng, solvable=False, max_tries=200) -> ModelParams:
    """Random admissible parameters; `solvable` additionally demands a finite
    stationary mean and positive single-regime warm starts at Q = (1, 1)."""
    for _ in range(max_tries):
        sigma1 = rng.uniform(0.05, 0.4)
        sigma2 = rng.uniform(0.05, 0.4)
        floor = 2.0 * max(sigma1, sigma2) ** 2
        rho = floor * 1.02 + rng.uniform(0.005, 0.35)
        delta = rng.uniform(0.02, 0.3)
        base = rho + delta
        params = ModelParams(
            delta=delta, rho=rho, kappa=rng.uniform(0.5, 12.0),
            c=rng.uniform(0.02, 0.5), alpha=rng.uniform(0.15, 0.85),
            sigma1=sigma1, sigma2=sigma2,
            p1=rng.uniform(0.02, 0.9), p2=rng.uniform(0.02, 0.9),
            varphi1=base + rng.uniform(0.5, 12.0),
            varphi2=base + rng.uniform(0.5, 12.0),
            zeta1=rng.uniform(0.2, 3.0), zeta2=rng.uniform(0.2, 3.0),
        )
        if not solvable:
            return params
        if params.kappa * base >= 0.7 * min(params.varphi1, params.varphi2):
            continue
        roots = solve_roots(params)
        if roots.tail.theta2 >= -1.05:
            continue
        return params
    raise RuntimeError("could not draw admissible parameters")


def solve_random_instance(rng):
    """Random solvable params with thresholds and law at Q = (1, 1) prices."""
    from cournotmfe import inverse_demand, solve_cdf_coeffs, solve_thresholds

    while True:
        params = draw_params(rng, solvable=True)
        eta = inverse_demand(params, (1.0, 1.0))
        roots = solve_roots(params)
        try:
            sol = solve_thresholds(params, eta, roots)
        except ThresholdSolveError:
            continue
        law = solve_cdf_coeffs(params, sol, roots)
        return params, eta, roots, sol, law
