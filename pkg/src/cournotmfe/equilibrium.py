"""Mean-field equilibrium: closing the model via the consistency fixed point.

The best-response map sends a candidate pair Q of regime-conditional
aggregate capacities to the stationary conditional means of the optimally
reflected process at the prices implied by Q.  The map is antitone
(componentwise order-reversing): larger aggregates mean lower prices, lower
investment barriers and a stochastically smaller stationary law.  Iterating
a damped update from the two corners of the a-priori box therefore yields
monotone lower/upper bracketing sequences that squeeze the unique fixed
point, which doubles as a numerical uniqueness certificate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import FixedPointError, HeavyTailError
from .params import ModelParams, inverse_demand, require_valid
from .roots import RootBundle, solve_roots
from .stationary import StationaryLaw, solve_cdf_coeffs
from .thresholds import ThresholdSolution, solve_thresholds


@dataclass(frozen=True)
class BestResponse:
    """One evaluation of the best-response map at a fixed aggregate Q."""

    Q: tuple
    eta: tuple
    thresholds: ThresholdSolution
    law: StationaryLaw
    means: tuple  # stationary conditional means per regime

    @property
    def residual(self) -> float:
        scale = max(1.0, abs(self.Q[0]), abs(self.Q[1]))
        return max(abs(self.means[0] - self.Q[0]), abs(self.means[1] - self.Q[1])) / scale


def best_response(
    params: ModelParams, Q, roots: RootBundle | None = None
) -> BestResponse:
    """Map Q to the stationary conditional means it induces."""
    roots = roots or solve_roots(params)
    if not (Q[0] > 0.0 and Q[1] > 0.0):
        raise ValueError(f"aggregate production must be positive, got {tuple(Q)}")
    eta = inverse_demand(params, Q)
    thresholds = solve_thresholds(params, eta, roots)
    law = solve_cdf_coeffs(params, thresholds, roots)
    means = (law.conditional_mean(1), law.conditional_mean(2))
    return BestResponse(Q=tuple(Q), eta=eta, thresholds=thresholds, law=law, means=means)


@dataclass(frozen=True)
class EquilibriumBounds:
    """A-priori box for the fixed point, independent of any trial Q.

    The floor thresholds come from the price floor eta = varphi (prices can
    only exceed the intercepts); their stationary means bound Q from below;
    re-solving at those lowest aggregates gives the highest thresholds and
    hence the upper bound.
    """

    Q_low: tuple
    Q_high: tuple
    a_low: tuple   # thresholds of the floor-price problem, per regime
    a_high: tuple  # thresholds at Q_low, per regime


def equilibrium_bounds(
    params: ModelParams, roots: RootBundle | None = None
) -> EquilibriumBounds:
    roots = roots or solve_roots(params)
    if not roots.tail.moment_finite:
        raise HeavyTailError(
            f"tail exponent {roots.tail.theta2:g} >= -1: stationary means diverge"
        )
    eta_floor = (params.varphi1, params.varphi2)
    sol_floor = solve_thresholds(params, eta_floor, roots)
    law_floor = solve_cdf_coeffs(params, sol_floor, roots)
    Q_low = (law_floor.conditional_mean(1), law_floor.conditional_mean(2))
    br_high = best_response(params, Q_low, roots)
    return EquilibriumBounds(
        Q_low=Q_low,
        Q_high=br_high.means,
        a_low=(sol_floor.a1, sol_floor.a2),
        a_high=(br_high.thresholds.a1, br_high.thresholds.a2),
    )


@dataclass(frozen=True)
class Equilibrium:
    """Unique stationary mean-field equilibrium and its diagnostics."""

    params: ModelParams
    roots: RootBundle
    Q_star: tuple
    a_star: tuple
    eta_star: tuple
    theta2: float
    thresholds: ThresholdSolution
    law: StationaryLaw
    residual: float
    bracket_width: float
    iterations: int
    bounds: EquilibriumBounds
    trace: tuple = field(repr=False)

    def summary(self) -> dict:
        return {
            "Q1_star": self.Q_star[0],
            "Q2_star": self.Q_star[1],
            "a1_star": self.a_star[0],
            "a2_star": self.a_star[1],
            "eta1_star": self.eta_star[0],
            "eta2_star": self.eta_star[1],
            "theta2": self.theta2,
            "residual": self.residual,
            "bracket_width": self.bracket_width,
            "iterations": self.iterations,
        }


def solve_equilibrium(
    params: ModelParams,
    omega: float = 0.5,
    tol: float = 1e-8,
    max_iter: int = 500,
    roots: RootBundle | None = None,
) -> Equilibrium:
    """Find the unique fixed point of the best-response map.

    Damped iteration Q <- (1-omega) Q + omega R(Q) run simultaneously from
    both box corners; antitonicity of R makes the pair valid lower/upper
    bounds at every step, and they are clamped to stay nested.  Stops when
    the bracket width and the midpoint residual both fall below `tol`
    (relative).  If the bracket stalls, the damping is reduced and a plain
    damped iteration from the midpoint finishes the job; the achieved
    bracket width is reported either way.
    """
    require_valid(params)
    roots = roots or solve_roots(params)
    bounds = equilibrium_bounds(params, roots)
    L = np.array(bounds.Q_low, dtype=float)
    U = np.array(bounds.Q_high, dtype=float)
    scale = max(1.0, float(np.max(U)))
    trace = []
    width = float(np.max(U - L)) / scale
    last_width = np.inf
    stall = 0
    it = 0
    while it < max_iter and width > tol:
        it += 1
        RU = np.array(best_response(params, tuple(U), roots).means)
        RL = np.array(best_response(params, tuple(L), roots).means)
        newL = np.maximum(L, (1.0 - omega) * L + omega * RU)
        newU = np.minimum(U, (1.0 - omega) * U + omega * RL)
        if np.any(newL > newU * (1.0 + 1e-12) + 1e-300):
            # brackets crossed beyond rounding: antitonicity must have failed
            raise FixedPointError(
                "bracketing sequences crossed; best-response map is not "
                "order-reversing at these parameters", trace=trace,
            )
        L, U = newL, np.maximum(newU, newL)
        width = float(np.max(U - L)) / scale
        trace.append({"iter": it, "L": tuple(L), "U": tuple(U), "width": width})
        if width > 0.97 * last_width:
            stall += 1
            if stall >= 8:
                break  # bracket no longer contracting; polish from midpoint
        else:
            stall = 0
        last_width = width

    Q = 0.5 * (L + U)
    br = best_response(params, tuple(Q), roots)
    resid = br.residual
    # midpoint polish: plain damped iteration inside the certified box
    om = omega
    polish = 0
    while resid > tol and polish < max_iter:
        polish += 1
        Q_next = np.clip((1.0 - om) * Q + om * np.array(br.means), L, U)
        br_next = best_response(params, tuple(Q_next), roots)
        if br_next.residual > resid:  # oscillation: damp harder
            om *= 0.5
            if om < 1e-3:
                raise FixedPointError(
                    f"fixed-point iteration stalled at residual {resid:.3e}",
                    trace=trace,
                )
            continue
        Q, br, resid = Q_next, br_next, br_next.residual
        trace.append({"iter": it + polish, "Q": tuple(Q), "residual": resid})
    if resid > tol:
        raise FixedPointError(
            f"fixed-point iteration did not reach tolerance {tol:g} "
            f"(residual {resid:.3e} after {it + polish} iterations)",
            trace=trace,
        )
    return Equilibrium(
        params=params,
        roots=roots,
        Q_star=tuple(Q),
        a_star=(br.thresholds.a1, br.thresholds.a2),
        eta_star=br.eta,
        theta2=roots.tail.theta2,
        thresholds=br.thresholds,
        law=br.law,
        residual=resid,
        bracket_width=width,
        iterations=it + polish,
        bounds=bounds,
        trace=tuple(trace),
    )
