"""Characteristic exponents of the model's piecewise closed forms.

Four root families are needed downstream:

* gamma (quadratic, per regime)  -- homogeneous exponents of the stopping
  value ODE on the middle interval;
* lambda (quartic)               -- exponents of the coupled stopping value
  system above both thresholds;
* alpha (quadratic, per regime)  -- exponents of the stationary CDF on the
  middle interval (log scale);
* theta (quartic)                -- exponents of the coupled stationary CDF
  system above both barriers; its largest negative root is the Pareto tail
  exponent of the firm-size distribution.

Both quartics are products of two regime quadratics shifted by a constant,
which pins down sign-change brackets at the quadratics' roots; each quartic
root is then located by Brent's method and polished by Newton steps.  The
theta quartic always has an exact root at zero, which is deflated
analytically before solving the remaining cubic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import BracketError
from .params import ChainLaw, ModelParams, chain_stationary, require_valid

#: residual tolerance for a root r of a polynomial with leading coefficient
#: a and degree d: |poly(r)| <= RESIDUAL_TOL * (1 + |a| * |r|**d)
RESIDUAL_TOL = 1e-10
_MAX_BISECT = 200


@dataclass(frozen=True)
class QuadraticRoots:
    """Roots lo < 0 < hi of a*x^2 + b*x + c with coefficients attached."""

    lo: float
    hi: float
    a: float
    b: float
    c: float

    def __call__(self, x):
        return (self.a * x + self.b) * x + self.c

    def derivative(self, x):
        return 2.0 * self.a * x + self.b


@dataclass(frozen=True)
class QuarticRoots:
    """Ordered real roots r1 < r2 < r3 < r4 of q1(x)*q2(x) - shift = 0."""

    r1: float
    r2: float
    r3: float
    r4: float
    q1: QuadraticRoots
    q2: QuadraticRoots
    shift: float
    zero_root: bool  # True when r3 == 0 exactly (theta family)

    @property
    def roots(self):
        return (self.r1, self.r2, self.r3, self.r4)

    @property
    def negative(self):
        return (self.r1, self.r2)

    @property
    def positive(self):
        return (self.r3, self.r4) if not self.zero_root else (self.r4,)

    def __call__(self, x):
        return self.q1(x) * self.q2(x) - self.shift

    def derivative(self, x):
        return self.q1.derivative(x) * self.q2(x) + self.q1(x) * self.q2.derivative(x)

    def expanded_coeffs(self):
        """Monomial coefficients (x^4 ... x^0) of the expanded quartic."""
        a1, b1, c1 = self.q1.a, self.q1.b, self.q1.c
        a2, b2, c2 = self.q2.a, self.q2.b, self.q2.c
        return (
            a1 * a2,
            a1 * b2 + b1 * a2,
            a1 * c2 + b1 * b2 + c1 * a2,
            b1 * c2 + c1 * b2,
            c1 * c2 - self.shift,
        )


@dataclass(frozen=True)
class TailExponent:
    """Pareto tail exponent of the stationary firm-size law."""

    theta2: float
    moment_finite: bool  # 1 + theta2 < 0, i.e. the stationary mean exists


def gamma_poly(params: ModelParams, regime: int):
    """Coefficients of the stopping-value quadratic for one regime."""
    s2 = params.sigma(regime) ** 2
    return 0.5 * s2, 0.5 * s2 - params.delta, -(params.rho + params.delta + params.p(regime))


def alpha_poly(params: ModelParams, regime: int):
    """Coefficients of the stationary-CDF quadratic for one regime."""
    s2 = params.sigma(regime) ** 2
    return 0.5 * s2, params.delta + 0.5 * s2, -params.p(regime)


def _solve_mixed_quadratic(a: float, b: float, c: float) -> QuadraticRoots:
    """Both roots of a*x^2+b*x+c with a > 0 > c, via the stable formula."""
    if not (a > 0.0 and c < 0.0):
        raise ValueError(f"expected a > 0 > c, got a={a}, c={c}")
    disc = b * b - 4.0 * a * c
    q = -0.5 * (b + np.copysign(np.sqrt(disc), b)) if b != 0.0 else np.sqrt(-a * c)
    r1, r2 = q / a, c / q
    lo, hi = (r1, r2) if r1 < r2 else (r2, r1)
    return QuadraticRoots(lo=lo, hi=hi, a=a, b=b, c=c)


def gamma_roots(params: ModelParams, regime: int = 1) -> QuadraticRoots:
    """Roots gamma_lo < 0 < gamma_hi of the stopping-value quadratic."""
    return _solve_mixed_quadratic(*gamma_poly(params, regime))


def alpha1_roots(params: ModelParams, regime: int = 1) -> QuadraticRoots:
    """Roots alpha_lo < 0 < alpha_hi of the stationary-CDF quadratic."""
    return _solve_mixed_quadratic(*alpha_poly(params, regime))


def _polish(f, fprime, x, lo, hi, steps=3):
    """A few guarded Newton steps, clipped to the bracketing interval."""
    for _ in range(steps):
        d = fprime(x)
        if d == 0.0:
            break
        step = f(x) / d
        x_new = min(max(x - step, lo), hi)
        if x_new == x:
            break
        x = x_new
    return x


def _expand_until_sign(f, start: float, direction: float) -> float:
    """Double |x| outward from start until f(x) > 0 (quartics open upward)."""
    x = start if start != 0.0 else direction
    for _ in range(200):
        if f(x) > 0.0:
            return x
        x *= 2.0
    raise BracketError("could not find an outer bracket endpoint")


def _product_quartic_roots(
    qa: QuadraticRoots, qb: QuadraticRoots, shift: float
) -> tuple:
    """Four real roots of qa(x)*qb(x) - shift for shift > 0.

    At every root of qa or qb the product term vanishes, so the quartic
    equals -shift < 0 there, while it is positive at +-infinity; together
    with positivity at 0 this yields one sign-change bracket per root.
    """
    quartic = lambda x: qa(x) * qb(x) - shift
    dquartic = lambda x: qa.derivative(x) * qb(x) + qa(x) * qb.derivative(x)
    neg_lo, neg_hi = min(qa.lo, qb.lo), max(qa.lo, qb.lo)
    pos_lo, pos_hi = min(qa.hi, qb.hi), max(qa.hi, qb.hi)
    if not quartic(0.0) > 0.0:
        raise BracketError("product quartic not positive at zero")
    far_neg = _expand_until_sign(quartic, 2.0 * neg_lo, -1.0)
    far_pos = _expand_until_sign(quartic, 2.0 * pos_hi, 1.0)
    brackets = ((far_neg, neg_lo), (neg_hi, 0.0), (0.0, pos_lo), (pos_hi, far_pos))
    roots = []
    for lo, hi in brackets:
        r = brentq(quartic, lo, hi, xtol=1e-14, rtol=1e-15, maxiter=_MAX_BISECT)
        roots.append(_polish(quartic, dquartic, r, lo, hi))
    return tuple(roots)


def lambda_roots(params: ModelParams) -> QuarticRoots:
    """Roots lam1 < lam2 < 0 < lam3 < lam4 of the value-side quartic."""
    require_valid(params)
    g1 = gamma_roots(params, 1)
    g2 = gamma_roots(params, 2)
    shift = params.p1 * params.p2
    r1, r2, r3, r4 = _product_quartic_roots(g1, g2, shift)
    return QuarticRoots(r1, r2, r3, r4, q1=g1, q2=g2, shift=shift, zero_root=False)


def _deflated_cubic(params: ModelParams):
    """Coefficients of (phi1*phi2 - p1*p2)/theta, exact by construction."""
    u1, w1, _ = alpha_poly(params, 1)
    u2, w2, _ = alpha_poly(params, 2)
    p1, p2 = params.p1, params.p2
    return (
        u1 * u2,
        u1 * w2 + u2 * w1,
        w1 * w2 - u1 * p2 - u2 * p1,
        -(w1 * p2 + w2 * p1),
    )


def theta_roots(params: ModelParams) -> tuple:
    """Roots th1 < th2 < th3 = 0 < th4 of the CDF-side quartic, plus the tail.

    Zero is always a root because both quadratics equal -p_i there and the
    quartic is their product shifted by p1*p2; it is deflated analytically
    and the remaining cubic is solved on the sign-change brackets delimited
    by the alpha roots of the two regimes.
    """
    require_valid(params)
    a1 = alpha1_roots(params, 1)
    a2 = alpha1_roots(params, 2)
    shift = params.p1 * params.p2
    c3, c2, c1, c0 = _deflated_cubic(params)
    cubic = lambda x: ((c3 * x + c2) * x + c1) * x + c0
    dcubic = lambda x: (3.0 * c3 * x + 2.0 * c2) * x + c1
    neg_lo, neg_hi = min(a1.lo, a2.lo), max(a1.lo, a2.lo)
    pos_hi = max(a1.hi, a2.hi)
    cauchy = 1.0 + max(abs(c2), abs(c1), abs(c0)) / c3
    far_neg, far_pos = -cauchy, cauchy
    if far_neg >= neg_lo:
        far_neg = 2.0 * neg_lo
    if far_pos <= pos_hi:
        far_pos = 2.0 * pos_hi
    roots = []
    for lo, hi in ((far_neg, neg_lo), (neg_hi, 0.0), (pos_hi, far_pos)):
        r = brentq(cubic, lo, hi, xtol=1e-14, rtol=1e-15, maxiter=_MAX_BISECT)
        roots.append(_polish(cubic, dcubic, r, lo, hi))
    th1, th2, th4 = roots
    quartic = QuarticRoots(
        th1, th2, 0.0, th4, q1=a1, q2=a2, shift=shift, zero_root=True
    )
    tail = TailExponent(theta2=th2, moment_finite=(1.0 + th2) < 0.0)
    return quartic, tail


@dataclass(frozen=True)
class RootBundle:
    """All root families for one parameter set, computed once and shared."""

    params: ModelParams
    chain: ChainLaw
    gamma1: QuadraticRoots
    gamma2: QuadraticRoots
    alpha1: QuadraticRoots
    alpha2: QuadraticRoots
    lambdas: QuarticRoots
    thetas: QuarticRoots
    tail: TailExponent

    def gamma(self, regime: int) -> QuadraticRoots:
        return self.gamma1 if regime == 1 else self.gamma2

    def alpha(self, regime: int) -> QuadraticRoots:
        return self.alpha1 if regime == 1 else self.alpha2


def solve_roots(params: ModelParams) -> RootBundle:
    """Compute every root family the closed forms need, with residual checks."""
    require_valid(params)
    thetas, tail = theta_roots(params)
    bundle = RootBundle(
        params=params,
        chain=chain_stationary(params),
        gamma1=gamma_roots(params, 1),
        gamma2=gamma_roots(params, 2),
        alpha1=alpha1_roots(params, 1),
        alpha2=alpha1_roots(params, 2),
        lambdas=lambda_roots(params),
        thetas=thetas,
        tail=tail,
    )
    _check_residuals(bundle)
    return bundle


def _check_residuals(bundle: RootBundle) -> None:
    for quad in (bundle.gamma1, bundle.gamma2, bundle.alpha1, bundle.alpha2):
        for r in (quad.lo, quad.hi):
            if abs(quad(r)) > RESIDUAL_TOL * (1.0 + quad.a * r * r):
                raise BracketError(f"quadratic root residual too large at {r}")
    for quartic in (bundle.lambdas, bundle.thetas):
        lead = quartic.q1.a * quartic.q2.a
        for r in quartic.roots:
            if abs(quartic(r)) > RESIDUAL_TOL * (1.0 + lead * r**4):
                raise BracketError(f"quartic root residual too large at {r}")
