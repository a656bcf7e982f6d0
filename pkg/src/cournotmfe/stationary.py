"""Closed-form stationary law of (capacity, regime) under barrier reflection.

The log-capacity process reflected at regime-dependent barriers b_i = ln a_i
admits a stationary joint distribution whose per-regime CDF is piecewise
exponential in log scale: two alpha-exponents on the interval between the
barriers (only the low-barrier regime carries mass there) and the two
negative theta-exponents above both barriers.  Four linear conditions
(vanishing at the own barrier, continuity and smoothness at the upper one,
and the regime marginals at infinity) pin down the coefficients.

All distribution computations happen in log space; capacities are
exponentiated only at the API boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import DivergentMomentError, HeavyTailError
from .params import ChainLaw, ModelParams, chain_stationary, require_valid
from .roots import QuadraticRoots, QuarticRoots, RootBundle, TailExponent, solve_roots

#: |k + exponent| below this switches closed-form integrals to the log branch
_LOG_TOL = 1e-9


def _plaw_int(ratio, expo):
    """(ratio**expo - 1)/expo with the log(ate) limit at expo ~ 0."""
    if abs(expo) < _LOG_TOL:
        return np.log(ratio)
    return (np.power(ratio, expo) - 1.0) / expo


@dataclass(frozen=True)
class StationaryLaw:
    """Stationary joint law of capacity and regime for fixed barriers."""

    params: ModelParams
    chain: ChainLaw
    low_regime: int
    a_low: float
    a_high: float
    alpha: QuadraticRoots  # CDF quadratic roots of the low regime
    thetas: QuarticRoots
    tail: TailExponent
    A1: float
    A2: float
    B1: float
    B2: float
    phi11: float
    phi12: float

    # -- structural helpers -------------------------------------------------

    def _pos(self, i: int) -> str:
        return "low" if i == self.low_regime else "high"

    def pi(self, i: int) -> float:
        return self.chain.pi(i)

    @property
    def pi_low(self) -> float:
        return self.chain.pi(self.low_regime)

    @property
    def pi_high(self) -> float:
        return self.chain.pi(3 - self.low_regime)

    @property
    def theta_neg(self) -> tuple:
        return self.thetas.r1, self.thetas.r2

    def barrier(self, i: int) -> float:
        return self.a_low if self._pos(i) == "low" else self.a_high

    def _upper_weights(self, i: int) -> tuple:
        """Coefficients of exp(theta_j (z - b_high)) in Pi'(z, i) above b_high."""
        th1, th2 = self.theta_neg
        if self._pos(i) == "low":
            return self.B1 * th1, self.B2 * th2
        return -self.B1 * self.phi11 * th1, -self.B2 * self.phi12 * th2

    # -- distribution functions ---------------------------------------------

    def cdf(self, x, i: int):
        """P(X <= x, regime = i) under the stationary law."""
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0.0):
            raise ValueError("capacity must be positive")
        th1, th2 = self.theta_neg
        out = np.zeros_like(x)
        if self._pos(i) == "low":
            ap, am = self.alpha.hi, self.alpha.lo
            mid = (x > self.a_low) & (x < self.a_high)
            if np.any(mid):
                r = x[mid] / self.a_low
                out[mid] = self.A1 * r**ap + self.A2 * r**am
            top = x >= self.a_high
            if np.any(top):
                r = x[top] / self.a_high
                out[top] = self.B1 * r**th1 + self.B2 * r**th2 + self.pi_low
        else:
            top = x > self.a_high
            if np.any(top):
                r = x[top] / self.a_high
                out[top] = (
                    -self.B1 * self.phi11 * r**th1
                    - self.B2 * self.phi12 * r**th2
                    + self.pi_high
                )
        return float(out) if np.ndim(x) == 0 else out

    def pdf(self, x, i: int):
        """Density of the stationary law restricted to regime i."""
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0.0):
            raise ValueError("capacity must be positive")
        th1, th2 = self.theta_neg
        out = np.zeros_like(x)
        if self._pos(i) == "low":
            ap, am = self.alpha.hi, self.alpha.lo
            mid = (x > self.a_low) & (x < self.a_high)
            if np.any(mid):
                r = x[mid] / self.a_low
                out[mid] = (self.A1 * ap * r**ap + self.A2 * am * r**am) / x[mid]
        top = x > self.a_high
        if np.any(top):
            w1, w2 = self._upper_weights(i)
            r = x[top] / self.a_high
            out[top] = (w1 * r**th1 + w2 * r**th2) / x[top]
        return float(out) if np.ndim(x) == 0 else out

    def marginal_cdf(self, x):
        return self.cdf(x, 1) + self.cdf(x, 2)

    @property
    def tail_coefficients(self) -> tuple:
        """(c1, c2) with P(X > x) = c1 (x/a_high)^th1 + c2 (x/a_high)^th2
        above both barriers; c2 > 0 always, so th2 is the true tail rate."""
        return (
            -self.B1 * (1.0 - self.phi11),
            -self.B2 * (1.0 - self.phi12),
        )

    def survival(self, x):
        """P(X > x); above both barriers uses the two-term power tail directly,
        so no cancellation against 1 occurs far out in the tail."""
        x = np.asarray(x, dtype=float)
        th1, th2 = self.theta_neg
        out = 1.0 - self.marginal_cdf(np.minimum(x, self.a_high))
        top = x >= self.a_high
        if np.any(top):
            c1, c2 = self.tail_coefficients
            r = np.where(top, x, self.a_high) / self.a_high
            out = np.where(top, c1 * r**th1 + c2 * r**th2, out)
        return float(out) if np.ndim(x) == 0 else out

    def log_survival(self, x):
        """log P(X > x), stable arbitrarily far out: the dominant power is
        factored so the result never underflows."""
        x = np.asarray(x, dtype=float)
        th1, th2 = self.theta_neg
        out = np.log(np.maximum(self.survival(np.minimum(x, self.a_high)), 1e-300))
        top = x >= self.a_high
        if np.any(top):
            c1, c2 = self.tail_coefficients
            r = np.where(top, x, self.a_high) / self.a_high
            with np.errstate(under="ignore"):
                out = np.where(
                    top, th2 * np.log(r) + np.log(c2 + c1 * r ** (th1 - th2)), out
                )
        return float(out) if np.ndim(x) == 0 else out

    # -- moments -------------------------------------------------------------

    def moment(self, k: float, i: int | None = None) -> float:
        """E[X^k 1{regime=i}]; full expectation of X^k when i is None.

        Requires k + theta2 < 0; raises otherwise (k = 1: heavy-tail error,
        higher k: divergent-moment error).
        """
        if i is None:
            return self.moment(k, self.low_regime) + self.moment(k, 3 - self.low_regime)
        th1, th2 = self.theta_neg
        if k + th2 >= 0.0:
            if k <= 1.0:
                raise HeavyTailError(
                    f"stationary mean diverges: tail exponent {th2:g} >= -{k:g}"
                )
            raise DivergentMomentError(
                f"stationary moment of order {k:g} diverges: tail exponent {th2:g}"
            )
        w1, w2 = self._upper_weights(i)
        tail = (self.a_high**k) * (w1 / -(k + th1) + w2 / -(k + th2))
        if self._pos(i) == "high":
            return tail
        ap, am = self.alpha.hi, self.alpha.lo
        ratio = self.a_high / self.a_low
        mid = (self.a_low**k) * (
            self.A1 * ap * _plaw_int(ratio, k + ap)
            + self.A2 * am * _plaw_int(ratio, k + am)
        )
        return mid + tail

    def conditional_mean(self, i: int) -> float:
        """E[X | regime = i] under the stationary law."""
        if not self.tail.moment_finite:
            raise HeavyTailError(
                f"stationary mean diverges: tail exponent {self.tail.theta2:g} >= -1"
            )
        return self.moment(1.0, i) / self.pi(i)

    def partial_moment(self, k: float, x: float, i: int | None = None) -> float:
        """Integral of y^k over the stationary law restricted to (0, x] and regime i."""
        if i is None:
            return self.partial_moment(k, x, self.low_regime) + self.partial_moment(
                k, x, 3 - self.low_regime
            )
        if x <= self.barrier(i):
            return 0.0
        th1, th2 = self.theta_neg
        w1, w2 = self._upper_weights(i)
        out = 0.0
        if self._pos(i) == "low":
            ap, am = self.alpha.hi, self.alpha.lo
            r_mid = min(x, self.a_high) / self.a_low
            out += (self.a_low**k) * (
                self.A1 * ap * _plaw_int(r_mid, k + ap)
                + self.A2 * am * _plaw_int(r_mid, k + am)
            )
        if x > self.a_high:
            r = x / self.a_high
            out += (self.a_high**k) * (
                w1 * _plaw_int(r, k + th1) + w2 * _plaw_int(r, k + th2)
            )
        return out

    # -- quantiles and tables -----------------------------------------------

    def quantile(self, q: float) -> float:
        """Smallest x with marginal CDF >= q, by monotone bisection in log x."""
        if not (0.0 < q < 1.0):
            raise ValueError(f"quantile level must lie in (0, 1), got {q}")
        b_lo = np.log(self.a_low)
        z_hi = np.log(self.a_high) + 1.0
        for _ in range(200):
            if self.marginal_cdf(np.exp(z_hi)) > q:
                break
            z_hi += np.log(2.0)
        else:
            raise RuntimeError("quantile bracket expansion failed")
        z = brentq(
            lambda zz: self.marginal_cdf(np.exp(zz)) - q,
            b_lo, z_hi, xtol=1e-13, rtol=1e-15, maxiter=300,
        )
        return float(np.exp(z))

    def dist_table(self, x_values):
        """Columns (x, cdf1, cdf2, pdf1, pdf2) for export."""
        x = np.asarray(x_values, dtype=float)
        return {
            "x": x,
            "cdf1": self.cdf(x, 1),
            "cdf2": self.cdf(x, 2),
            "pdf1": self.pdf(x, 1),
            "pdf2": self.pdf(x, 2),
        }

    # -- corridor ------------------------------------------------------------

    def corridor_probability(self) -> float:
        """P(X strictly between the two barriers)."""
        return float(self.marginal_cdf(self.a_high) - self.marginal_cdf(self.a_low))

    def corridor_capacity_share(self) -> float:
        """Share of aggregate capacity held strictly between the barriers."""
        mean = self.moment(1.0)
        inside = self.partial_moment(1.0, self.a_high) - self.partial_moment(
            1.0, self.a_low
        )
        return float(inside / mean)


def solve_cdf_coeffs(
    params: ModelParams, thresholds, roots: RootBundle | None = None
) -> StationaryLaw:
    """Build the stationary law for given barriers.

    `thresholds` is either a ThresholdSolution or a pair (a1, a2) of
    physical-regime barriers.  The regime with the smaller barrier carries
    the mass on the inter-barrier interval; the first linear condition makes
    A2 = -A1 hold exactly.
    """
    require_valid(params)
    roots = roots or solve_roots(params)
    if hasattr(thresholds, "a1"):
        a1, a2 = thresholds.a1, thresholds.a2
    else:
        a1, a2 = float(thresholds[0]), float(thresholds[1])
    if not (a1 > 0.0 and a2 > 0.0):
        raise ValueError(f"barriers must be positive, got {(a1, a2)}")
    if abs(a1 - a2) < 1e-12 * max(a1, a2):  # symmetric-degenerate case
        a1 = a2 = max(a1, a2)
    lo = 1 if a1 <= a2 else 2
    a_low, a_high = (a1, a2) if lo == 1 else (a2, a1)
    chain = roots.chain
    alpha = roots.alpha(lo)
    th1, th2 = roots.thetas.r1, roots.thetas.r2
    p_high = params.p(3 - lo)
    phi11 = alpha(th1) / p_high
    phi12 = alpha(th2) / p_high
    pi_low, pi_high = chain.pi(lo), chain.pi(3 - lo)

    ratio = a_high / a_low
    e_p, e_m = ratio**alpha.hi, ratio**alpha.lo
    # unknowns (A1, B1, B2) after eliminating A2 = -A1
    mat = np.array(
        [
            [e_p - e_m, -1.0, -1.0],
            [alpha.hi * e_p - alpha.lo * e_m, -th1, -th2],
            [0.0, phi11, phi12],
        ]
    )
    rhs = np.array([pi_low, 0.0, pi_high])
    A1, B1, B2 = np.linalg.solve(mat, rhs)
    return StationaryLaw(
        params=params, chain=chain, low_regime=lo, a_low=a_low, a_high=a_high,
        alpha=alpha, thetas=roots.thetas, tail=roots.tail,
        A1=float(A1), A2=float(-A1), B1=float(B1), B2=float(B2),
        phi11=float(phi11), phi12=float(phi12),
    )
