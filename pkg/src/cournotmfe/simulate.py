"""Monte Carlo engine for the reflected regime-switching geometric dynamics.

Paths follow the log-capacity SDE dz = -(delta + sigma_e^2/2) dt + sigma_e dB
between regime switches, reflected upward at the regime barrier b_e = ln a_e.
Switch times are drawn from exact exponential clocks and overlaid on the
Euler grid (steps are split at switch times, so regime timing carries no
O(dt) bias); at a switch the lump-sum investment pushes the path up to the
new barrier when needed.  Reflection is applied per substep in log space,
so recorded states never sit below the active barrier.

Statistics are accumulated online: per-regime histograms on a fixed log
grid (the empirical CDF), per-path sums for conditional means with
between-path standard errors, and corridor occupancy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .params import ModelParams, require_valid
from .stationary import StationaryLaw


@dataclass(frozen=True)
class SimConfig:
    """Simulation settings; `barriers` are the physical-regime thresholds.

    `scheme` picks the reflection discretization: "projection" clamps the
    Euler endpoint to the barrier (simple, with an O(sqrt(dt)) boundary
    layer bias), "bridge" additionally samples the in-step minimum of the
    Brownian bridge so the recorded endpoints follow the continuous-time
    reflected law exactly for any dt.
    """

    barriers: tuple
    horizon: float
    dt: float = 1e-2
    n_paths: int = 100
    seed: int = 0
    burn_in: float = 0.2
    x0: float | None = None
    i0: int = 1
    record_stride: int = 50
    n_bins: int = 4000
    z_span: float = 12.0
    store_paths: int = 0
    scheme: str = "projection"

    def validated(self) -> "SimConfig":
        if not (self.dt > 0.0 and self.horizon >= self.dt):
            raise ValueError("need dt > 0 and horizon >= dt")
        if not (0.0 <= self.burn_in < 1.0):
            raise ValueError("burn_in must lie in [0, 1)")
        if self.n_paths < 1 or self.record_stride < 1:
            raise ValueError("n_paths and record_stride must be >= 1")
        if not (self.barriers[0] > 0.0 and self.barriers[1] > 0.0):
            raise ValueError("barriers must be positive")
        if self.x0 is not None and not self.x0 > 0.0:
            raise ValueError("x0 must be positive")
        if self.i0 not in (1, 2):
            raise ValueError("i0 must be 1 or 2")
        if self.scheme not in ("projection", "bridge"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        return self


@dataclass
class PathStats:
    """Accumulated stationary statistics of a simulation run."""

    config: SimConfig
    n_recorded: int
    occupancy: tuple
    cond_means: tuple
    cond_mean_ses: tuple
    cond_sq_means: tuple
    corridor_prob: float
    corridor_share: float
    max_reflection_violation: float
    edges_z: np.ndarray = field(repr=False)
    hist: np.ndarray = field(repr=False)  # (2, n_bins + 1), last bucket = overflow
    trajectories: dict | None = field(default=None, repr=False)

    def empirical_cdf(self, i: int):
        """Joint-scale empirical CDF of (X, regime=i) at the grid edges."""
        cum = np.cumsum(self.hist[i - 1, :-1]) / self.n_recorded
        return np.exp(self.edges_z[1:]), cum

    def ks_marginal(self, law: StationaryLaw) -> float:
        """Kolmogorov-Smirnov distance between empirical and analytic marginal CDFs."""
        x = np.exp(self.edges_z[1:])
        emp = np.cumsum(self.hist[0, :-1] + self.hist[1, :-1]) / self.n_recorded
        return float(np.max(np.abs(emp - law.marginal_cdf(x))))

    def ks_regime(self, law: StationaryLaw, i: int) -> float:
        x, emp = self.empirical_cdf(i)
        return float(np.max(np.abs(emp - law.cdf(x, i))))

    def to_dict(self) -> dict:
        return {
            "n_recorded": self.n_recorded,
            "occupancy1": self.occupancy[0],
            "occupancy2": self.occupancy[1],
            "cond_mean1": self.cond_means[0],
            "cond_mean2": self.cond_means[1],
            "cond_mean_se1": self.cond_mean_ses[0],
            "cond_mean_se2": self.cond_mean_ses[1],
            "corridor_prob": self.corridor_prob,
            "corridor_share": self.corridor_share,
            "max_reflection_violation": self.max_reflection_violation,
        }


def simulate(params: ModelParams, config: SimConfig) -> PathStats:
    """Simulate the barrier policy and collect stationary statistics."""
    require_valid(params)
    config = config.validated()
    rng = np.random.default_rng(np.random.SeedSequence(config.seed))

    b = np.log(np.asarray(config.barriers, dtype=float))
    sig = np.array([params.sigma1, params.sigma2])
    drift = -(params.delta + 0.5 * sig**2)
    p_int = np.array([params.p1, params.p2])

    n = config.n_paths
    x0 = config.x0 if config.x0 is not None else float(np.max(config.barriers))
    z = np.full(n, np.log(x0))
    reg = np.full(n, config.i0 - 1, dtype=np.int64)
    I_cum = np.zeros(n)
    push = np.maximum(b[reg] - z, 0.0)
    I_cum += push
    z += push
    t_next = rng.exponential(1.0 / p_int[reg])

    n_steps = int(round(config.horizon / config.dt))
    burn_steps = int(np.floor(config.burn_in * n_steps))
    dt = config.dt

    z_lo = float(np.min(b)) - 1e-12
    edges = z_lo + (config.z_span / config.n_bins) * np.arange(config.n_bins + 1)
    inv_dz = config.n_bins / config.z_span
    hist = np.zeros((2, config.n_bins + 1), dtype=np.int64)
    count = np.zeros((2, n), dtype=np.int64)
    xsum = np.zeros((2, n))
    x2sum = np.zeros((2, n))
    b_lo, b_hi = float(np.min(b)), float(np.max(b))
    corridor_n = 0
    corridor_x = 0.0
    total_x = 0.0
    n_rec = 0
    max_violation = -np.inf

    n_store = min(config.store_paths, n)
    if n_store > 0:
        rec_times = []
        rec_x = []
        rec_reg = []
        rec_I = []

    exact_step = config.scheme == "bridge"

    for step in range(n_steps):
        t_hi = (step + 1) * dt
        t_cur = np.full(n, step * dt)
        while True:
            t_tgt = np.minimum(t_next, t_hi)
            dts = t_tgt - t_cur
            act = dts > 0.0
            if np.any(act):
                h = dts[act]
                s = sig[reg[act]]
                x_end = drift[reg[act]] * h + s * np.sqrt(h) * rng.standard_normal(
                    int(act.sum())
                )
                if exact_step:
                    # in-step minimum of the free path given its endpoint
                    # (Brownian bridge, drift-independent); pushing up by the
                    # barrier deficit at that minimum realizes the Skorokhod
                    # endpoint exactly
                    u = 1.0 - rng.random(int(act.sum()))
                    m = 0.5 * (x_end - np.sqrt(x_end**2 - 2.0 * s * s * h * np.log(u)))
                    up = np.maximum(b[reg[act]] - z[act] - m, 0.0)
                    I_cum[act] += up
                    z[act] = z[act] + x_end + up
                else:
                    zi = z[act] + x_end
                    up = np.maximum(b[reg[act]] - zi, 0.0)
                    I_cum[act] += up
                    z[act] = zi + up
                t_cur = t_tgt
            sw = t_next <= t_hi
            sw &= t_cur >= t_next
            if not np.any(sw):
                break
            reg[sw] ^= 1
            up = np.maximum(b[reg[sw]] - z[sw], 0.0)
            I_cum[sw] += up
            z[sw] += up
            t_next[sw] = t_cur[sw] + rng.exponential(1.0 / p_int[reg[sw]])

        if n_store > 0 and step % config.record_stride == 0:
            rec_times.append(t_hi)
            rec_x.append(np.exp(z[:n_store]).copy())
            rec_reg.append(reg[:n_store] + 1)
            rec_I.append(I_cum[:n_store].copy())

        if step >= burn_steps and (step - burn_steps) % config.record_stride == 0:
            x = np.exp(z)
            idx = np.minimum((inv_dz * (z - z_lo)).astype(np.int64), config.n_bins)
            np.add.at(hist, (reg, idx), 1)
            for r in (0, 1):
                m = reg == r
                count[r] += m
                xsum[r] += np.where(m, x, 0.0)
                x2sum[r] += np.where(m, x * x, 0.0)
            inside = (z > b_lo) & (z < b_hi)
            corridor_n += int(inside.sum())
            corridor_x += float(x[inside].sum())
            total_x += float(x.sum())
            n_rec += n
            max_violation = max(max_violation, float(np.max(b[reg] - z)))

    occ = count.sum(axis=1) / max(n_rec, 1)
    cond_means = []
    cond_ses = []
    cond_sq = []
    for r in (0, 1):
        have = count[r] > 0
        total_r = count[r].sum()
        if total_r == 0:
            cond_means.append(np.nan)
            cond_ses.append(np.nan)
            cond_sq.append(np.nan)
            continue
        path_means = xsum[r][have] / count[r][have]
        w = count[r][have] / total_r
        cond_means.append(float(np.sum(w * path_means)))
        # paths are independent: between-path spread gives the standard error
        npaths_eff = int(have.sum())
        se = float(np.std(path_means, ddof=1) / np.sqrt(npaths_eff)) if npaths_eff > 1 else np.nan
        cond_ses.append(se)
        cond_sq.append(float(x2sum[r].sum() / total_r))

    trajectories = None
    if n_store > 0:
        trajectories = {
            "t": np.asarray(rec_times),
            "X": np.vstack(rec_x).T,
            "regime": np.vstack(rec_reg).T,
            "I": np.vstack(rec_I).T,
        }

    return PathStats(
        config=config,
        n_recorded=n_rec,
        occupancy=(float(occ[0]), float(occ[1])),
        cond_means=(cond_means[0], cond_means[1]),
        cond_mean_ses=(cond_ses[0], cond_ses[1]),
        cond_sq_means=(cond_sq[0], cond_sq[1]),
        corridor_prob=corridor_n / max(n_rec, 1),
        corridor_share=corridor_x / total_x if total_x > 0 else np.nan,
        max_reflection_violation=max(0.0, max_violation),
        edges_z=edges,
        hist=hist,
        trajectories=trajectories,
    )


def corridor_stats(source) -> tuple:
    """Corridor probability and capacity share chi.

    `source` is a StationaryLaw (analytic, preferred) or a PathStats
    (empirical).  The corridor is the open interval between the two
    barriers; chi is the share of aggregate capacity parked there.
    """
    if isinstance(source, StationaryLaw):
        return source.corridor_probability(), source.corridor_capacity_share()
    if isinstance(source, PathStats):
        return float(source.corridor_prob), float(source.corridor_share)
    raise TypeError(f"expected StationaryLaw or PathStats, got {type(source)!r}")


def effective_samples(params: ModelParams, config: SimConfig) -> float:
    """Crude effective-sample estimate: recorded span over the mixing time.

    The capacity process decorrelates at rate ~delta and the regime at rate
    p1 + p2; twice the sum of both time scales is used as the integrated
    autocorrelation time.
    """
    tau = 2.0 * (1.0 / params.delta + 1.0 / (params.p1 + params.p2))
    t_post = config.horizon * (1.0 - config.burn_in)
    return config.n_paths * t_post / tau
