"""Exogenous model parameters, admissibility checks, and primitive maps.

The industry model is driven by a two-state Markov chain (the macro regime)
modulating production volatility and the inverse-demand curve.  Everything
downstream consumes the immutable :class:`ModelParams` defined here.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, InvalidParamsError

#: Exact key set accepted in configuration files.
CONFIG_KEYS = (
    "delta", "rho", "kappa", "c", "alpha",
    "sigma1", "sigma2", "p1", "p2",
    "varphi1", "varphi2", "zeta1", "zeta2",
)


@dataclass(frozen=True)
class ModelParams:
    """All exogenous constants of the model.

    delta    -- capital depreciation rate (per unit time)
    rho      -- discount rate (per unit time)
    kappa    -- marginal investment cost (currency per capacity unit)
    c        -- quadratic running-cost coefficient
    alpha    -- inverse-demand elasticity exponent, in (0, 1)
    sigma_i  -- production volatility in regime i
    p_i      -- switching intensity out of regime i, in (0, 1)
    varphi_i -- price-level intercept of the inverse demand in regime i
    zeta_i   -- inverse-demand scale in regime i
    """

    delta: float
    rho: float
    kappa: float
    c: float
    alpha: float
    sigma1: float
    sigma2: float
    p1: float
    p2: float
    varphi1: float
    varphi2: float
    zeta1: float
    zeta2: float

    def sigma(self, i: int) -> float:
        return self.sigma1 if i == 1 else self.sigma2

    def p(self, i: int) -> float:
        return self.p1 if i == 1 else self.p2

    def varphi(self, i: int) -> float:
        return self.varphi1 if i == 1 else self.varphi2

    def zeta(self, i: int) -> float:
        return self.zeta1 if i == 1 else self.zeta2

    def replace(self, **changes) -> "ModelParams":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in CONFIG_KEYS}


@dataclass(frozen=True)
class ChainLaw:
    """Stationary distribution of the two-state regime chain."""

    pi1: float
    pi2: float

    def pi(self, i: int) -> float:
        return self.pi1 if i == 1 else self.pi2


@dataclass(frozen=True)
class Violation:
    name: str
    severity: str  # "error" | "warning"
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple

    @property
    def errors(self):
        return tuple(v for v in self.violations if v.severity == "error")

    @property
    def warnings(self):
        return tuple(v for v in self.violations if v.severity == "warning")

    @property
    def admissible(self) -> bool:
        """True iff the report is empty (no errors, no warnings)."""
        return not self.violations

    @property
    def usable(self) -> bool:
        """True iff no error-level violation (warnings allowed)."""
        return not self.errors

    def __str__(self):
        if not self.violations:
            return "all parameter checks passed"
        return "; ".join(f"[{v.severity}] {v.name}: {v.message}" for v in self.violations)


def validate(params: ModelParams) -> ValidationReport:
    """Check every admissibility constraint and report all violations.

    Pure and idempotent.  Positivity/range failures are errors; the
    impatience condition rho > 2*max(sigma_i^2) is reported as a warning
    only, since reference parameterizations sit at (or beyond) its boundary
    while all closed forms below stay well defined as long as
    rho + 2*delta > max(sigma_i^2).
    """
    v = []

    def err(name, msg):
        v.append(Violation(name, "error", msg))

    def warn(name, msg):
        v.append(Violation(name, "warning", msg))

    for name in ("delta", "rho", "kappa", "c"):
        val = getattr(params, name)
        if not np.isfinite(val) or val <= 0.0:
            err(name, f"{name} must be a positive finite number, got {val}")
    if not (0.0 < params.alpha < 1.0):
        err("alpha", f"alpha must lie in (0, 1), got {params.alpha}")
    for i in (1, 2):
        if not (params.sigma(i) > 0.0 and np.isfinite(params.sigma(i))):
            err(f"sigma{i}", f"sigma{i} must be positive, got {params.sigma(i)}")
        if not (0.0 < params.p(i) < 1.0):
            err(
                f"p{i}",
                f"p{i} must lie in (0, 1), got {params.p(i)} "
                "(model-specific range; a chain intensity is not otherwise bounded)",
            )
        if not (params.varphi(i) > 0.0 and np.isfinite(params.varphi(i))):
            err(f"varphi{i}", f"varphi{i} must be positive, got {params.varphi(i)}")
        if not (params.zeta(i) > 0.0 and np.isfinite(params.zeta(i))):
            err(f"zeta{i}", f"zeta{i} must be positive, got {params.zeta(i)}")

    if v:  # basic positivity failed; derived checks would be meaningless
        return ValidationReport(tuple(v))

    sig2max = max(params.sigma1**2, params.sigma2**2)
    if params.rho + 2.0 * params.delta <= sig2max:
        err(
            "affine_denominator",
            "rho + 2*delta must exceed max(sigma_i^2) for the affine "
            f"particular solutions to exist (got {params.rho + 2 * params.delta:g} "
            f"<= {sig2max:g})",
        )
    if params.rho <= 2.0 * sig2max:
        how = "at the boundary" if np.isclose(params.rho, 2.0 * sig2max, rtol=1e-12) else "strictly"
        warn(
            "impatience",
            f"discount condition rho > 2*max(sigma_i^2) violated {how} "
            f"({params.rho:g} <= {2 * sig2max:g}); admissibility of the "
            "barrier policy is no longer guaranteed analytically",
        )
    if min(params.varphi1, params.varphi2) <= params.rho + params.delta:
        err(
            "price_level",
            "min(varphi1, varphi2) must exceed rho + delta "
            f"({min(params.varphi1, params.varphi2):g} <= {params.rho + params.delta:g})",
        )
    return ValidationReport(tuple(v))


def require_valid(params: ModelParams) -> None:
    """Raise InvalidParamsError if any error-level constraint is violated."""
    report = validate(params)
    if not report.usable:
        raise InvalidParamsError(
            "inadmissible parameters: "
            + "; ".join(f"{e.name}: {e.message}" for e in report.errors)
        )


def inverse_demand(params: ModelParams, Q, regime: int | None = None):
    """Price eta_i = varphi_i + zeta_i * Q_i^(-alpha) for aggregate production Q.

    Q is a pair (Q1, Q2); pass `regime` for a single component.  Strictly
    decreasing in Q_i with limit varphi_i as Q_i grows.
    """
    if regime is not None:
        q = float(Q if np.isscalar(Q) else Q[regime - 1])
        if not q > 0.0:
            raise ValueError(f"aggregate production must be positive, got {q}")
        return params.varphi(regime) + params.zeta(regime) * q ** (-params.alpha)
    q1, q2 = float(Q[0]), float(Q[1])
    if not (q1 > 0.0 and q2 > 0.0):
        raise ValueError(f"aggregate production must be positive, got {(q1, q2)}")
    return (
        params.varphi1 + params.zeta1 * q1 ** (-params.alpha),
        params.varphi2 + params.zeta2 * q2 ** (-params.alpha),
    )


def chain_stationary(params: ModelParams) -> ChainLaw:
    """Stationary law of the regime chain: pi_i proportional to p_j, j != i."""
    total = params.p1 + params.p2
    if not total > 0.0:
        raise InvalidParamsError("switching intensities must be positive")
    return ChainLaw(pi1=params.p2 / total, pi2=params.p1 / total)


# ---------------------------------------------------------------------------
# configuration ingestion
# ---------------------------------------------------------------------------

def params_from_dict(data: dict) -> ModelParams:
    missing = [k for k in CONFIG_KEYS if k not in data]
    unknown = [k for k in data if k not in CONFIG_KEYS]
    if missing:
        raise ConfigError(f"missing config keys: {', '.join(missing)}")
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    values = {}
    for k in CONFIG_KEYS:
        try:
            values[k] = float(data[k])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"config key {k} is not a number: {data[k]!r}") from exc
    return ModelParams(**values)


def parse_params_text(text: str) -> ModelParams:
    """Parse a JSON object or a flat one-key-per-line key/value file."""
    stripped = text.strip()
    if stripped.startswith("{"):
        try:
            data = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON config: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("JSON config must be an object of key/value pairs")
        return params_from_dict(data)
    data = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        for sep in ("=", ":"):
            if sep in line:
                key, _, val = line.partition(sep)
                break
        else:
            parts = line.split(None, 1)
            if len(parts) != 2:
                raise ConfigError(f"cannot parse config line {lineno}: {raw!r}")
            key, val = parts
        key, val = key.strip(), val.strip()
        if key in data:
            raise ConfigError(f"duplicate config key {key!r} (line {lineno})")
        data[key] = val
    return params_from_dict(data)


def load_params(path) -> ModelParams:
    return parse_params_text(Path(path).read_text())
