"""Free-boundary solver for the regime-dependent investment thresholds.

For fixed prices eta = (eta1, eta2) the representative firm's optimal policy
reflects capacity upward at a regime-dependent barrier a_i.  The barriers
and the piecewise closed form of the marginal value v (and its integral V,
the firm value) follow from smooth-fit conditions, which reduce to a
two-equation power-law system in (a_low, a_high).

The derivation labels regimes so that the first one owns the *lower*
threshold.  The solver therefore works in an ordered frame (low regime f,
high regime s), tries both assignments of physical regimes to that frame,
and keeps the one that produces a consistent solution (both can succeed
only in the degenerate case a1 = a2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ThresholdSolveError
from .params import ModelParams, require_valid
from .roots import QuadraticRoots, RootBundle, solve_roots

#: relative residual demanded of the smooth-fit system
SYSTEM_TOL = 1e-11
#: |1 + exponent| below this switches power-law primitives to the log branch
LOG_BRANCH_TOL = 1e-9


def _pow_ramp(coef_times_ref, expo, ratio):
    """Primitive of coef*(y/ref)**expo from ref to x, with x = ratio*ref.

    Returns coef*ref/(1+expo) * (ratio**(1+expo) - 1), or the log limit
    coef*ref*log(ratio) when 1+expo vanishes.
    """
    if abs(1.0 + expo) < LOG_BRANCH_TOL:
        return coef_times_ref * np.log(ratio)
    return coef_times_ref / (1.0 + expo) * (np.power(ratio, 1.0 + expo) - 1.0)


@dataclass(frozen=True)
class ParticularCoeffs:
    """Affine particular solutions of the value ODEs, in the ordered frame.

    (C1, D1) solve the uncoupled middle-interval equation of the low regime;
    (L1, L2) and (R1, R2) solve the coupled 2x2 systems above both
    thresholds; G11, G12 are the coupling ratios attached to the negative
    power exponents there.
    """

    C1: float
    D1: float
    L1: float
    L2: float
    R1: float
    R2: float
    G11: float
    G12: float


def _solve_2x2(d1, d2, off1, off2, r1, r2):
    """Solve [[d1, -off1], [-off2, d2]] x = r for x, by the closed inverse."""
    det = d1 * d2 - off1 * off2
    return (r1 * d2 + off1 * r2) / det, (off2 * r1 + d1 * r2) / det


def particular_coeffs(
    params: ModelParams, eta, lo: int = 1, roots: RootBundle | None = None
) -> ParticularCoeffs:
    """Affine particular solutions for prices eta, low regime `lo`."""
    require_valid(params)
    roots = roots or solve_roots(params)
    hi = 3 - lo
    rho, delta, c, kappa = params.rho, params.delta, params.c, params.kappa
    p_f, p_s = params.p(lo), params.p(hi)
    s2_f, s2_s = params.sigma(lo) ** 2, params.sigma(hi) ** 2
    eta_f, eta_s = eta[lo - 1], eta[hi - 1]

    C1 = -2.0 * c / (rho + 2.0 * delta + p_f - s2_f)
    D1 = (eta_f + p_f * kappa) / (rho + delta + p_f)
    L1, L2 = _solve_2x2(
        rho + 2.0 * delta + p_f - s2_f,
        rho + 2.0 * delta + p_s - s2_s,
        p_f, p_s, -2.0 * c, -2.0 * c,
    )
    R1, R2 = _solve_2x2(
        rho + delta + p_f, rho + delta + p_s, p_f, p_s, eta_f, eta_s
    )
    G_f = roots.gamma(lo)
    lam1, lam2 = roots.lambdas.r1, roots.lambdas.r2
    return ParticularCoeffs(
        C1=C1, D1=D1, L1=L1, L2=L2, R1=R1, R2=R2,
        G11=G_f(lam1) / p_f, G12=G_f(lam2) / p_f,
    )


@dataclass(frozen=True)
class Ladder:
    """Affine maps from the thresholds to the homogeneous coefficients.

    A = c11 + c12*a_low, B = c21 + c22*a_low (middle interval) and
    M1 = d11 + d12*a_high, M2 = d21 + d22*a_high (upper interval); the e/f
    rows are the eliminated forms entering the final two-equation system.
    """

    c11: float; c12: float; c21: float; c22: float
    d11: float; d12: float; d21: float; d22: float
    e11: float; e12: float; e21: float; e22: float
    f11: float; f12: float; f21: float; f22: float


def _build_ladder(kappa, gam: QuadraticRoots, lam1, lam2, part: ParticularCoeffs):
    g_m, g_p = gam.lo, gam.hi
    dg = g_m - g_p
    c11 = (kappa - part.D1) * g_m / dg
    c12 = part.C1 * (1.0 - g_m) / dg
    c21 = -(kappa - part.D1) * g_p / dg
    c22 = -part.C1 * (1.0 - g_p) / dg
    dl = lam2 - lam1
    d11 = -(kappa - part.R2) * lam2 / (part.G11 * dl)
    d12 = -part.L2 * (1.0 - lam2) / (part.G11 * dl)
    d21 = (kappa - part.R2) * lam1 / (part.G12 * dl)
    d22 = part.L2 * (1.0 - lam1) / (part.G12 * dl)
    e11 = d11 + d21 + part.R1 - part.D1
    e12 = d12 + d22 + part.L1 - part.C1
    e21 = d11 * lam1 + d21 * lam2
    e22 = d12 * lam1 + d22 * lam2 + part.L1 - part.C1
    dgp = g_p - g_m
    f11 = (e21 - g_m * e11) / dgp
    f12 = (e22 - g_m * e12) / dgp
    f21 = (g_p * e11 - e21) / dgp
    f22 = (g_p * e12 - e22) / dgp
    return Ladder(c11, c12, c21, c22, d11, d12, d21, d22,
                  e11, e12, e21, e22, f11, f12, f21, f22)


@dataclass(frozen=True)
class ThresholdSolution:
    """Thresholds and closed-form stopping value for fixed prices.

    a1, a2 are the physical regime thresholds; `low_regime` names the regime
    owning min(a1, a2).  All homogeneous coefficients are stored in the
    ordered frame (low regime first).
    """

    params: ModelParams
    roots: RootBundle
    eta: tuple
    a1: float
    a2: float
    low_regime: int
    A: float
    B: float
    M1: float
    M2: float
    part: ParticularCoeffs
    ladder: Ladder
    residual: float
    iterations: int
    method: str

    @property
    def a_low(self) -> float:
        return self.a1 if self.low_regime == 1 else self.a2

    @property
    def a_high(self) -> float:
        return self.a2 if self.low_regime == 1 else self.a1

    @property
    def gamma(self) -> QuadraticRoots:
        return self.roots.gamma(self.low_regime)

    @property
    def lam(self) -> tuple:
        return self.roots.lambdas.r1, self.roots.lambdas.r2

    def threshold(self, i: int) -> float:
        return self.a1 if i == 1 else self.a2

    def _pos(self, i: int) -> str:
        return "low" if i == self.low_regime else "high"

    def v_parts(self, x, i: int):
        """Value, first and second derivative of v(., i) at x (piecewise)."""
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0.0):
            raise ValueError("capacity must be positive")
        kappa = self.params.kappa
        lam1, lam2 = self.lam
        g_m, g_p = self.gamma.lo, self.gamma.hi
        a_f, a_s = self.a_low, self.a_high
        p = self.part
        v = np.full_like(x, kappa)
        dv = np.zeros_like(x)
        d2v = np.zeros_like(x)
        if self._pos(i) == "low":
            mid = (x > a_f) & (x < a_s)
            if np.any(mid):
                r = x[mid] / a_f
                tp, tm = self.A * r**g_p, self.B * r**g_m
                v[mid] = tp + tm + p.C1 * x[mid] + p.D1
                dv[mid] = (g_p * tp + g_m * tm) / x[mid] + p.C1
                d2v[mid] = (g_p * (g_p - 1) * tp + g_m * (g_m - 1) * tm) / x[mid] ** 2
            top = x >= a_s
            co1, co2, lin, cst = self.M1, self.M2, p.L1, p.R1
        else:
            top = x > a_s
            co1, co2 = -self.M1 * p.G11, -self.M2 * p.G12
            lin, cst = p.L2, p.R2
        if np.any(top):
            r = x[top] / a_s
            t1, t2 = co1 * r**lam1, co2 * r**lam2
            v[top] = t1 + t2 + lin * x[top] + cst
            dv[top] = (lam1 * t1 + lam2 * t2) / x[top] + lin
            d2v[top] = (lam1 * (lam1 - 1) * t1 + lam2 * (lam2 - 1) * t2) / x[top] ** 2
        return v, dv, d2v

    def value_v(self, x, i: int):
        """Marginal value of capacity v(x, i); equals kappa below a_i."""
        out = self.v_parts(x, i)[0]
        return float(out) if np.ndim(x) == 0 else out

    def mid_integral(self) -> float:
        """Integral of v(., low regime) over (a_low, a_high), closed form."""
        a_f, a_s = self.a_low, self.a_high
        if a_s <= a_f:
            return 0.0
        ratio = a_s / a_f
        g_m, g_p = self.gamma.lo, self.gamma.hi
        return (
            _pow_ramp(self.A * a_f, g_p, ratio)
            + _pow_ramp(self.B * a_f, g_m, ratio)
            + 0.5 * self.part.C1 * (a_s**2 - a_f**2)
            + self.part.D1 * (a_s - a_f)
        )

    def smooth_fit_residuals(self) -> dict:
        """The six smooth-fit conditions, evaluated from the closed forms.

        Contact of the low regime's middle branch at a_low, of the high
        regime's upper branch at a_high (value = kappa, slope = 0 each), and
        continuity of the low regime's value/slope across a_high.
        """
        kappa = self.params.kappa
        g_m, g_p = self.gamma.lo, self.gamma.hi
        lam1, lam2 = self.lam
        a_f, a_s = self.a_low, self.a_high
        p = self.part
        r = a_s / a_f
        mid_v = self.A + self.B + p.C1 * a_f + p.D1
        mid_d = (g_p * self.A + g_m * self.B) / a_f + p.C1
        hi_v = -self.M1 * p.G11 - self.M2 * p.G12 + p.L2 * a_s + p.R2
        hi_d = (-lam1 * self.M1 * p.G11 - lam2 * self.M2 * p.G12) / a_s + p.L2
        mid_at_s = self.A * r**g_p + self.B * r**g_m + p.C1 * a_s + p.D1
        mid_d_at_s = (g_p * self.A * r**g_p + g_m * self.B * r**g_m) / a_s + p.C1
        top_at_s = self.M1 + self.M2 + p.L1 * a_s + p.R1
        top_d_at_s = (lam1 * self.M1 + lam2 * self.M2) / a_s + p.L1
        return {
            "value_low": mid_v - kappa,
            "slope_low": mid_d,
            "value_high": hi_v - kappa,
            "slope_high": hi_d,
            "value_join": mid_at_s - top_at_s,
            "slope_join": mid_d_at_s - top_d_at_s,
        }


def single_regime_threshold(params: ModelParams, eta_i: float, regime: int) -> float:
    """Threshold of the one-regime problem (no switching), in closed form.

    Used both as a warm start and as the exact solution in the symmetric
    case, where the switching terms cancel.
    """
    s2 = params.sigma(regime) ** 2
    rho, delta, c, kappa = params.rho, params.delta, params.c, params.kappa
    a_q = 0.5 * s2
    b_q = 0.5 * s2 - delta
    c_q = -(rho + delta)
    disc = b_q * b_q - 4.0 * a_q * c_q
    g_m = (-b_q - np.sqrt(disc)) / (2.0 * a_q)
    Ct = -2.0 * c / (rho + 2.0 * delta - s2)
    Dt = eta_i / (rho + delta)
    a = g_m * (kappa - Dt) / (Ct * (g_m - 1.0))
    if not (np.isfinite(a) and a > 0.0):
        raise ThresholdSolveError(
            f"no positive investment threshold in regime {regime}: "
            f"price {eta_i:g} too low relative to investment cost {kappa:g}"
        )
    return float(a)


def _residuals(a_f, a_s, kappa, gam, ladder):
    g_m, g_p = gam.lo, gam.hi
    r = a_s / a_f
    with np.errstate(over="ignore", invalid="ignore"):
        lhs1 = r**g_p * (ladder.c11 + ladder.c12 * a_f)
        rhs1 = ladder.f11 + ladder.f12 * a_s
        lhs2 = r**g_m * (ladder.c21 + ladder.c22 * a_f)
        rhs2 = ladder.f21 + ladder.f22 * a_s
        F = np.array([lhs1 - rhs1, lhs2 - rhs2])
        scale = np.array(
            [max(1.0, abs(lhs1), abs(rhs1)), max(1.0, abs(lhs2), abs(rhs2))]
        )
    return F, scale


def _jacobian(a_f, a_s, gam, ladder):
    g_m, g_p = gam.lo, gam.hi
    r = a_s / a_f
    rp, rm = r**g_p, r**g_m
    J = np.empty((2, 2))
    J[0, 0] = rp * (ladder.c12 - g_p * (ladder.c11 + ladder.c12 * a_f) / a_f)
    J[0, 1] = (g_p / a_s) * rp * (ladder.c11 + ladder.c12 * a_f) - ladder.f12
    J[1, 0] = rm * (ladder.c22 - g_m * (ladder.c21 + ladder.c22 * a_f) / a_f)
    J[1, 1] = (g_m / a_s) * rm * (ladder.c21 + ladder.c22 * a_f) - ladder.f22
    return J


def _newton_solve(a0_f, a0_s, kappa, gam, ladder, max_iter=100):
    """Damped Newton in log-thresholds with backtracking on the residual."""
    u = np.log([a0_f, a0_s])
    trace = []
    it = 0
    with np.errstate(over="ignore", invalid="ignore"):
        F, scale = _residuals(np.exp(u[0]), np.exp(u[1]), kappa, gam, ladder)
        norm = float(np.max(np.abs(F) / scale))
        while it < max_iter and norm >= 1e-14 and np.all(np.isfinite(F)):
            it += 1
            a_f, a_s = np.exp(u)
            J = _jacobian(a_f, a_s, gam, ladder) * np.array([a_f, a_s])
            try:
                step = np.linalg.solve(J, -F)
            except np.linalg.LinAlgError:
                break
            step = np.clip(step, -2.0, 2.0)
            t = 1.0
            improved = False
            for _ in range(30):
                u_try = u + t * step
                F_try, scale_try = _residuals(
                    np.exp(u_try[0]), np.exp(u_try[1]), kappa, gam, ladder
                )
                norm_try = float(np.max(np.abs(F_try) / scale_try))
                if np.all(np.isfinite(F_try)) and norm_try < norm:
                    u, F, scale, norm = u_try, F_try, scale_try, norm_try
                    improved = True
                    break
                t *= 0.5
            trace.append(norm)
            if not improved:
                break
    return np.exp(u[0]), np.exp(u[1]), norm, it, trace


def _bisect_fallback(a0_f, a0_s, kappa, gam, ladder):
    """Nested bracketing on the warm-start rectangle (heuristic rescue)."""
    from scipy.optimize import brentq

    def inner_root(a_s):
        grid = np.geomspace(1e-3 * min(a0_f, a_s), a_s, 400)
        vals = [_residuals(g, a_s, kappa, gam, ladder)[0][0] for g in grid]
        for k in range(len(grid) - 1, 0, -1):
            if (np.isfinite(vals[k]) and np.isfinite(vals[k - 1])
                    and np.sign(vals[k]) != np.sign(vals[k - 1])):
                return brentq(
                    lambda a: _residuals(a, a_s, kappa, gam, ladder)[0][0],
                    grid[k - 1], grid[k], xtol=1e-15, rtol=1e-15,
                )
        return None

    def outer(a_s):
        a_f = inner_root(a_s)
        if a_f is None:
            return np.nan
        return _residuals(a_f, a_s, kappa, gam, ladder)[0][1]

    grid = np.geomspace(0.05 * a0_s, 20.0 * a0_s, 200)
    vals = [outer(g) for g in grid]
    for k in range(1, len(grid)):
        if (np.isfinite(vals[k]) and np.isfinite(vals[k - 1])
                and np.sign(vals[k]) != np.sign(vals[k - 1])):
            a_s = brentq(outer, grid[k - 1], grid[k], xtol=1e-15, rtol=1e-15)
            a_f = inner_root(a_s)
            F, scale = _residuals(a_f, a_s, kappa, gam, ladder)
            return a_f, a_s, float(np.max(np.abs(F) / scale))
    return None


def _assemble(params, roots, eta, lo, a_f, a_s, part, ladder, residual, its, method):
    A = ladder.c11 + ladder.c12 * a_f
    B = ladder.c21 + ladder.c22 * a_f
    M1 = ladder.d11 + ladder.d12 * a_s
    M2 = ladder.d21 + ladder.d22 * a_s
    a1, a2 = (a_f, a_s) if lo == 1 else (a_s, a_f)
    return ThresholdSolution(
        params=params, roots=roots, eta=tuple(eta), a1=a1, a2=a2,
        low_regime=lo, A=A, B=B, M1=M1, M2=M2, part=part, ladder=ladder,
        residual=residual, iterations=its, method=method,
    )


def _is_consistent(sol: ThresholdSolution) -> bool:
    """Ordering holds, residual small and v never exceeds the obstacle."""
    a_f, a_s = sol.a_low, sol.a_high
    if not (np.isfinite(a_f) and np.isfinite(a_s) and a_f > 0.0):
        return False
    if a_f > a_s * (1.0 + 1e-10):
        return False
    if sol.residual > SYSTEM_TOL:
        return False
    kappa = sol.params.kappa
    grid = np.geomspace(a_f * (1 + 1e-9), 50.0 * a_s, 120)
    for i in (1, 2):
        if np.max(sol.value_v(grid, i)) > kappa * (1.0 + 1e-8):
            return False
    return True


def solve_thresholds(
    params: ModelParams, eta, roots: RootBundle | None = None
) -> ThresholdSolution:
    """Solve the smooth-fit system for the investment thresholds at prices eta.

    Tries the labeling suggested by the single-regime warm starts first and
    the swapped labeling second; exactly one of them admits a consistent
    solution away from the symmetric-degenerate case.
    """
    require_valid(params)
    if not (eta[0] > 0.0 and eta[1] > 0.0):
        raise ValueError(f"prices must be positive, got {tuple(eta)}")
    roots = roots or solve_roots(params)
    warm = {i: single_regime_threshold(params, eta[i - 1], i) for i in (1, 2)}
    order = (1, 2) if warm[1] <= warm[2] else (2, 1)
    failures = []
    candidates = []
    for lo in order:
        hi = 3 - lo
        part = particular_coeffs(params, eta, lo, roots)
        gam = roots.gamma(lo)
        lam1, lam2 = roots.lambdas.r1, roots.lambdas.r2
        ladder = _build_ladder(params.kappa, gam, lam1, lam2, part)
        a0_f, a0_s = warm[lo], warm[hi]
        if a0_f > a0_s:  # keep the warm start inside the assumed ordering
            a0_f, a0_s = a0_s * 0.999, a0_s
        a_f, a_s, resid, its, trace = _newton_solve(
            a0_f, a0_s, params.kappa, gam, ladder
        )
        method = "newton"
        if resid > SYSTEM_TOL or not np.isfinite(resid):
            rescue = _bisect_fallback(a0_f, a0_s, params.kappa, gam, ladder)
            if rescue is not None:
                a_f, a_s, resid = rescue
                its, method = its, "bracket"
        sol = _assemble(params, roots, eta, lo, a_f, a_s, part, ladder,
                        resid, its, method)
        if _is_consistent(sol):
            candidates.append(sol)
            if sol.a_high - sol.a_low > 1e-9 * sol.a_high:
                break  # strictly ordered solution is unique
        else:
            failures.append((lo, resid, trace[-5:] if trace else []))
    if candidates:
        return candidates[0]
    raise ThresholdSolveError(
        f"free-boundary system did not converge for eta={tuple(eta)}; "
        f"attempts (low_regime, residual): {[(f[0], f[1]) for f in failures]}",
        residual=min((f[1] for f in failures), default=None),
        trace=failures,
    )


def solve_k(params: ModelParams, eta, sol: ThresholdSolution) -> tuple:
    """Integration constants (k1, k2) linking v to the firm value V.

    They solve a 2x2 linear system whose determinant rho^2 + rho*(p1+p2) is
    strictly positive, so the solution always exists.
    """
    rho, delta, c, kappa = params.rho, params.delta, params.c, params.kappa
    lo = sol.low_regime
    p_f, p_s = params.p(lo), params.p(3 - lo)
    eta_f, eta_s = eta[lo - 1], eta[2 - lo]
    a_f, a_s = sol.a_low, sol.a_high
    I_low = sol.mid_integral()
    rhs_f = (eta_f - delta * kappa) * a_f - c * a_f**2 - p_f * kappa * (a_s - a_f)
    rhs_s = (eta_s - delta * kappa) * a_s - c * a_s**2 + p_s * I_low
    k_f, k_s = _solve_2x2(rho + p_f, rho + p_s, p_f, p_s, rhs_f, rhs_s)
    return (k_f, k_s) if lo == 1 else (k_s, k_f)


@dataclass(frozen=True)
class ValueFunctions:
    """Evaluators of the stopping value v and the firm value V."""

    sol: ThresholdSolution
    k1: float
    k2: float

    def k(self, i: int) -> float:
        return self.k1 if i == 1 else self.k2

    def v(self, x, i: int):
        return self.sol.value_v(x, i)

    def V(self, x, i: int):
        """Firm value; V' = v above the threshold, V' = kappa below."""
        sol = self.sol
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0.0):
            raise ValueError("capacity must be positive")
        kappa = sol.params.kappa
        lam1, lam2 = sol.lam
        a_f, a_s = sol.a_low, sol.a_high
        p = sol.part
        k_i = self.k(i)
        a_i = sol.threshold(i)
        out = k_i + kappa * (x - a_i)
        if sol._pos(i) == "low":
            mid = (x > a_f) & (x < a_s)
            mid_at = lambda xx: (
                _pow_ramp(sol.A * a_f, sol.gamma.hi, xx / a_f)
                + _pow_ramp(sol.B * a_f, sol.gamma.lo, xx / a_f)
                + 0.5 * p.C1 * (xx**2 - a_f**2)
                + p.D1 * (xx - a_f)
            )
            out = np.where(mid, k_i + mid_at(x), out)
            top = x >= a_s
            if np.any(top):
                base = k_i + mid_at(a_s)
                xt = np.where(top, x, a_s)
                out = np.where(
                    top,
                    base
                    + _pow_ramp(sol.M1 * a_s, lam1, xt / a_s)
                    + _pow_ramp(sol.M2 * a_s, lam2, xt / a_s)
                    + 0.5 * p.L1 * (xt**2 - a_s**2)
                    + p.R1 * (xt - a_s),
                    out,
                )
        else:
            top = x > a_s
            if np.any(top):
                xt = np.where(top, x, a_s)
                out = np.where(
                    top,
                    k_i
                    + _pow_ramp(-sol.M1 * p.G11 * a_s, lam1, xt / a_s)
                    + _pow_ramp(-sol.M2 * p.G12 * a_s, lam2, xt / a_s)
                    + 0.5 * p.L2 * (xt**2 - a_s**2)
                    + p.R2 * (xt - a_s),
                    out,
                )
        return float(out) if np.ndim(x) == 0 else out


def value_functions(
    params: ModelParams, eta, sol: ThresholdSolution | None = None,
    roots: RootBundle | None = None,
) -> ValueFunctions:
    """Convenience constructor: thresholds + integration constants."""
    if sol is None:
        sol = solve_thresholds(params, eta, roots)
    k1, k2 = solve_k(params, eta, sol)
    return ValueFunctions(sol=sol, k1=k1, k2=k2)
