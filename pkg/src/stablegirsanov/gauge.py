"""The gauge function u(x) = E_x[exp(-A_inf)] and its identities.

u is estimated by Monte Carlo with horizon doubling: every path is simulated
once to the largest horizon and A is read off at each intermediate horizon.
For radial kernels u is tabulated on a radius grid and interpolated by a
monotone cubic in log|x|; nested checks use the interpolant and add its
leave-one-out residual to their error budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import InvalidArgument
from .functionals import kernel_values
from .girsanov import horizon_sums
from .kernels import KernelSpec
from .stable_process import McEstimate, SmallJumpPolicy, StableParams, combined_std_err, iter_jump_paths

__all__ = [
    "GaugeConfig", "GaugeEstimate", "estimate_u", "UGrid", "u_grid",
    "u_martingale_check", "u_integral_identity_check", "u_limit_check", "jensen_bound_check",
    "harnack_ratio_check", "infinite_hitting_check", "CheckReport",
]


@dataclass(frozen=True)
class GaugeConfig:
    """Simulation settings shared by the gauge estimators."""

    base_horizon: float = 10.0
    doublings: int = 4
    cutoff: float = 0.05
    policy: SmallJumpPolicy = SmallJumpPolicy.DROP
    tol: float = 1e-3

    @property
    def horizons(self) -> list[float]:
        return [self.base_horizon * 2.0 ** k for k in range(self.doublings + 1)]

    def to_dict(self) -> dict:
        return {"base_horizon": self.base_horizon, "doublings": self.doublings, "cutoff": self.cutoff,
                "policy": SmallJumpPolicy.parse(self.policy).value, "tol": self.tol}


@dataclass(frozen=True)
class GaugeEstimate:
    x: np.ndarray
    u_hat: McEstimate
    horizon_used: float
    tail_flag: float
    per_horizon: list
    mean_A: McEstimate
    tail_bias: float  # mean decrease of exp(-A) over the last doubling

    def __post_init__(self):
        if not 0.0 <= self.tail_flag <= 1.0:
            raise InvalidArgument("tail_flag must lie in [0, 1]")

    def to_dict(self) -> dict:
        return {"x": np.asarray(self.x).tolist(), "u_hat": self.u_hat.to_dict(),
                "horizon_used": self.horizon_used, "tail_flag": self.tail_flag,
                "per_horizon": [e.to_dict() for e in self.per_horizon],
                "mean_A": self.mean_A.to_dict(), "tail_bias": self.tail_bias}


def _require_nonneg(F: KernelSpec):
    if F.lower_bound < 0:
        raise InvalidArgument("the gauge estimators need F >= 0")


def _A_at_horizons(params, F, x, n_paths, stream, cfg: GaugeConfig, first_index=0):
    hs = cfg.horizons
    A = np.zeros((n_paths, len(hs)))
    if F.is_zero:
        return A
    paths = iter_jump_paths(params, x, hs[-1], cfg.cutoff, cfg.policy, stream, n_paths, first_index)
    for i, p in enumerate(paths):
        A[i] = horizon_sums(p, kernel_values(p, F), hs)
    return A


def estimate_u(params: StableParams, F: KernelSpec, x, n_paths: int, stream: int,
               cfg: GaugeConfig | None = None) -> GaugeEstimate:
    """Monte Carlo mean of exp(-A_T) at the largest horizon.

    Since F >= 0 the truncated value over-estimates u; ``tail_flag`` is the
    fraction of paths whose A still moved by more than tol * max(1, A) over
    the last doubling and ``tail_bias`` the mean drop of exp(-A) there.
    """
    _require_nonneg(F)
    cfg = cfg or GaugeConfig()
    x = np.asarray(x, dtype=float).reshape(-1)
    A = _A_at_horizons(params, F, x, n_paths, stream, cfg)
    M = np.exp(-A)
    inc = A[:, -1] - A[:, -2]
    flag = float(np.mean(inc > cfg.tol * np.maximum(1.0, A[:, -1])))
    per = [McEstimate.from_samples(M[:, k]) for k in range(A.shape[1])]
    return GaugeEstimate(x, per[-1], cfg.horizons[-1], flag, per, McEstimate.from_samples(A[:, -1]),
                         float(np.mean(M[:, -2] - M[:, -1])))


# ---------------------------------------------------------------------------
# radial interpolant


@dataclass(frozen=True, eq=False)
class UGrid:
    """Radial gauge table with a monotone cubic interpolant in log r."""

    radii: np.ndarray
    estimates: list
    r_floor: float = 1e-3
    tail_exponent: float = 1.0
    residual: float = field(init=False)

    def __post_init__(self):
        r = np.maximum(self.radii, self.r_floor)
        u = np.array([e.u_hat.mean for e in self.estimates])
        object.__setattr__(self, "_lr", np.log(r))
        object.__setattr__(self, "_u", u)
        object.__setattr__(self, "_interp", PchipInterpolator(np.log(r), u))
        # leave-one-out residual over interior nodes
        res = 0.0
        for i in range(1, len(r) - 1):
            keep = np.arange(len(r)) != i
            f = PchipInterpolator(np.log(r[keep]), u[keep])
            res = max(res, abs(float(f(np.log(r[i]))) - u[i]))
        object.__setattr__(self, "residual", res)

    @property
    def values(self) -> np.ndarray:
        return self._u.copy()

    @property
    def min_u(self) -> float:
        return float(self._u.min())

    def radial(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        lr = np.log(np.clip(r, math.exp(self._lr[0]), math.exp(self._lr[-1])))
        out = np.clip(self._interp(lr), 0.0, 1.0)
        r_last = math.exp(self._lr[-1])
        far = r > r_last
        if np.any(far):
            # 1 - u decays like a power of |x| beyond the grid
            gap = max(1.0 - self._u[-1], 0.0)
            out = np.where(far, 1.0 - gap * (r_last / np.maximum(r, r_last)) ** self.tail_exponent, out)
        return out

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return self.radial(np.linalg.norm(x, axis=-1))

    def to_rows(self) -> list[dict]:
        return [{"r": float(r), "u_hat": e.u_hat.mean, "std_err": e.u_hat.std_err, "tail_flag": e.tail_flag}
                for r, e in zip(self.radii, self.estimates)]


def u_grid(params: StableParams, F: KernelSpec, radii, n_paths: int, stream: int,
           cfg: GaugeConfig | None = None, tail_exponent: float | None = None) -> UGrid:
    """Estimate u at r e_1 for each radius and build the interpolant.

    The tail exponent of 1 - u beyond the grid defaults to min(beta, d) - alpha
    clipped to [0.5, 3] when F carries a class tag, else 1.
    """
    if not F.radial:
        raise InvalidArgument("the radial interpolant needs a radial kernel")
    radii = np.asarray(sorted(radii), dtype=float)
    ests = []
    for k, r in enumerate(radii):
        x = np.zeros(params.d)
        x[0] = r
        ests.append(estimate_u(params, F, x, n_paths, stream + 7919 * k, cfg))
    if tail_exponent is None:
        tag = next((t for t in F.class_tags if hasattr(t, "beta")), None)
        tail_exponent = float(np.clip(min(tag.beta, params.d) - params.alpha, 0.5, 3.0)) if tag else 1.0
    return UGrid(radii, ests, tail_exponent=tail_exponent)


# ---------------------------------------------------------------------------
# identity checks


@dataclass(frozen=True)
class CheckReport:
    name: str
    lhs: float
    rhs: float
    budget: float
    passed: bool
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs, "budget": self.budget,
                "passed": self.passed, "detail": self.detail}


def u_martingale_check(params: StableParams, F: KernelSpec, x, t: float, n_paths: int, stream: int,
                       ugrid: UGrid, cfg: GaugeConfig | None = None, direct: GaugeEstimate | None = None,
                       k_sigma: float = 3.0) -> CheckReport:
    """u(x) against E_x[u(X_t) exp(-A_t)] using the interpolant at X_t."""
    _require_nonneg(F)
    cfg = cfg or GaugeConfig()
    x = np.asarray(x, dtype=float).reshape(-1)
    direct = direct or estimate_u(params, F, x, n_paths, stream + 1, cfg)
    vals = np.empty(n_paths)
    for i, p in enumerate(iter_jump_paths(params, x, t, cfg.cutoff, cfg.policy, stream, n_paths)):
        A = float(np.sum(kernel_values(p, F))) if not F.is_zero else 0.0
        vals[i] = float(ugrid(p.end[None, :])[0]) * math.exp(-A)
    nested = McEstimate.from_samples(vals)
    budget = k_sigma * combined_std_err(nested, direct.u_hat) + ugrid.residual + abs(direct.tail_bias)
    diff = abs(direct.u_hat.mean - nested.mean)
    return CheckReport("u_martingale", direct.u_hat.mean, nested.mean, budget, bool(diff <= budget),
                       {"t": t, "nested": nested.to_dict(), "direct": direct.to_dict(),
                        "interp_residual": ugrid.residual})


def u_integral_identity_check(params: StableParams, F: KernelSpec, x, n_paths: int, stream: int,
                              ugrid: UGrid, cfg: GaugeConfig | None = None,
                              direct: GaugeEstimate | None = None, green_h0: float | None = None,
                              k_sigma: float = 3.0) -> CheckReport:
    """u(x) against 1 - E_x[sum_s u(X_s)(1 - exp(-F(X_{s-}, X_s)))].

    Also checks E A~ <= E A <= G h0(x) and E A~ <= 1/min(u) - 1.  The
    identity relies on pure-jump accumulation, so under BrownianMatch the
    comparison is reported as a diagnostic and does not decide ``passed``.
    """
    _require_nonneg(F)
    cfg = cfg or GaugeConfig()
    x = np.asarray(x, dtype=float).reshape(-1)
    direct = direct or estimate_u(params, F, x, n_paths, stream + 1, cfg)
    T = cfg.horizons[-1]
    s_vals = np.zeros(n_paths)
    at_vals = np.zeros(n_paths)
    a_vals = np.zeros(n_paths)
    if not F.is_zero:
        for i, p in enumerate(iter_jump_paths(params, x, T, cfg.cutoff, cfg.policy, stream, n_paths)):
            f = kernel_values(p, F)
            w = -np.expm1(-f)
            s_vals[i] = float(np.sum(ugrid(p.post) * w)) if f.size else 0.0
            at_vals[i] = float(np.sum(w))
            a_vals[i] = float(np.sum(f))
    S = McEstimate.from_samples(s_vals)
    At = McEstimate.from_samples(at_vals)
    A = McEstimate.from_samples(a_vals)
    rhs = 1.0 - S.mean
    budget = k_sigma * combined_std_err(S, direct.u_hat) + ugrid.residual * At.mean + abs(direct.tail_bias)
    ok = abs(direct.u_hat.mean - rhs) <= budget
    c = ugrid.min_u
    bound_gauge = (1.0 / c - 1.0) if c > 0 else math.inf
    bound_ok = At.mean <= bound_gauge + k_sigma * At.std_err
    green_ok = True if green_h0 is None else A.mean <= green_h0 + k_sigma * A.std_err
    order_ok = S.mean <= At.mean + 1e-12 and At.mean <= A.mean + 1e-12
    diagnostic = SmallJumpPolicy.parse(cfg.policy) is SmallJumpPolicy.BROWNIAN_MATCH
    return CheckReport("u_integral_identity", direct.u_hat.mean, rhs, budget,
                       bool((ok or diagnostic) and bound_ok and green_ok and order_ok),
                       {"sum_u_dAtilde": S.to_dict(), "A_tilde": At.to_dict(), "A": A.to_dict(),
                        "min_grid_u": c, "gauge_bound": bound_gauge, "gauge_bound_ok": bool(bound_ok),
                        "green_h0": green_h0, "green_bound_ok": bool(green_ok), "order_ok": bool(order_ok),
                        "identity_ok": bool(ok), "diagnostic_only": diagnostic})


def jensen_bound_check(direct: GaugeEstimate, green_h0: float | None = None,
                       k_sigma: float = 3.0) -> CheckReport:
    """u(x) >= exp(-E_x A_inf) >= exp(-G h0(x)).

    The truncated E A under-estimates E A_inf, so the first bound is tested
    with the truncated mean, which makes it slightly stricter.
    """
    lower = math.exp(-direct.mean_A.mean)
    budget = k_sigma * direct.u_hat.std_err + abs(direct.tail_bias)
    ok = direct.u_hat.mean + budget >= lower
    green_lower = None if green_h0 is None else math.exp(-green_h0)
    chain_ok = True if green_h0 is None else lower + k_sigma * lower * direct.mean_A.std_err >= green_lower
    return CheckReport("jensen_bound", direct.u_hat.mean, lower, budget, bool(ok and chain_ok),
                       {"exp_minus_mean_A": lower, "exp_minus_green_h0": green_lower,
                        "chain_ok": bool(chain_ok)})


def u_limit_check(params: StableParams, F: KernelSpec, n_paths: int, stream: int, ugrid: UGrid,
                  x=None, cfg: GaugeConfig | None = None, delta: float = 0.05,
                  min_fraction: float = 0.9, k_sigma: float = 3.0) -> CheckReport:
    """Fraction of paths with u(X_T) > 1 - delta at each doubling horizon.

    Passes when the fraction is non-decreasing within noise and reaches
    ``min_fraction`` at the largest horizon.
    """
    cfg = cfg or GaugeConfig()
    x = np.zeros(params.d) if x is None else np.asarray(x, dtype=float).reshape(-1)
    hs = cfg.horizons
    hit = np.zeros((n_paths, len(hs)))
    for i, p in enumerate(iter_jump_paths(params, x, hs[-1], cfg.cutoff, cfg.policy, stream, n_paths)):
        k = np.searchsorted(p.times, hs, side="right")
        pos = np.vstack([p.start[None, :], p.post])[k]
        hit[i] = ugrid(pos) > 1.0 - delta
    frac = hit.mean(axis=0)
    se = np.sqrt(np.maximum(frac * (1 - frac), 1.0 / n_paths) / n_paths)
    mono = bool(np.all(np.diff(frac) >= -k_sigma * np.sqrt(se[1:] ** 2 + se[:-1] ** 2)))
    ok = mono and frac[-1] >= min_fraction
    return CheckReport("u_limit", float(frac[-1]), min_fraction, 0.0, bool(ok),
                       {"horizons": hs, "fraction": frac.tolist(), "monotone": mono, "delta": delta})


def harnack_ratio_check(params: StableParams, F: KernelSpec, n_paths: int, stream: int,
                        R_values=(1.0, 2.0, 4.0, 8.0), cfg: GaugeConfig | None = None,
                        radial_factors=(2.0, 3.0, 4.0), n_directions: int = 2,
                        k_sigma: float = 3.0) -> CheckReport:
    """max/min of u over points of V(0, 2R, 4R) for each R.

    Passes when the largest per-annulus ratio is below twice the smallest and
    the minimum over the largest annulus is at least the minimum over the
    smallest divided by the empirical constant.  Equal-radius points are
    compared as a radial-symmetry check.
    """
    _require_nonneg(F)
    cfg = cfg or GaugeConfig()
    rng = np.random.default_rng(stream)
    dirs = [np.eye(params.d)[0]]
    for _ in range(n_directions - 1):
        v = rng.standard_normal(params.d)
        dirs.append(v / np.linalg.norm(v))
    per = []
    sym_ok = True
    idx = 0
    for R in R_values:
        vals = []
        for fct in radial_factors:
            same_r = []
            for e in dirs:
                est = estimate_u(params, F, fct * R * e, n_paths, stream + 104729 * (idx + 1), cfg)
                idx += 1
                vals.append(est.u_hat)
                same_r.append(est.u_hat)
            for a in same_r[1:]:
                if abs(a.mean - same_r[0].mean) > k_sigma * combined_std_err(a, same_r[0]):
                    sym_ok = False
        means = np.array([v.mean for v in vals])
        per.append({"R": R, "min": float(means.min()), "max": float(means.max()),
                    "ratio": float(means.max() / means.min()) if means.min() > 0 else math.inf,
                    "u": means.tolist(), "std_err": [v.std_err for v in vals]})
    ratios = np.array([p["ratio"] for p in per])
    c_emp = float(ratios.max())
    scale_ok = bool(ratios.max() < 2.0 * ratios.min())
    liminf_ok = bool(per[-1]["min"] >= per[0]["min"] / c_emp)
    return CheckReport("harnack", float(ratios.max()), float(ratios.min()), 2.0,
                       bool(scale_ok and liminf_ok),
                       {"annuli": per, "c_emp": c_emp, "scale_ok": scale_ok, "liminf_ok": liminf_ok,
                        "radial_symmetry_ok": sym_ok})


def infinite_hitting_check(params: StableParams, n_paths: int, horizon: float, stream: int,
                           doublings: int = 2, cutoff: float = 1e-2,
                           policy=SmallJumpPolicy.DROP) -> CheckReport:
    """Distinct dyadic annuli {2^n <= |x| < 2^(n+1)}, n >= 0, visited up to T 2^k."""
    params.require_transient()
    hs = [horizon * 2.0 ** k for k in range(doublings + 1)]
    counts = np.zeros((n_paths, len(hs)))
    norms = np.zeros((n_paths, len(hs)))
    for i, p in enumerate(iter_jump_paths(params, np.zeros(params.d), hs[-1], cutoff, policy, stream, n_paths)):
        tt, xx = p.skeleton()
        r = np.linalg.norm(xx, axis=1)
        level = np.where(r >= 1.0, np.floor(np.log2(np.maximum(r, 1.0))), -1)
        for k, T in enumerate(hs):
            m = int(np.searchsorted(tt, T, side="right"))
            lv = level[:m]
            counts[i, k] = np.unique(lv[lv >= 0]).size
            norms[i, k] = r[m - 1]
    med = np.median(counts, axis=0)
    med_r = np.median(norms, axis=0)
    ok = bool(np.all(np.diff(med) > 0) and np.all(np.diff(med_r) > 0))
    return CheckReport("infinite_hitting", float(med[-1]), float(med[0]), 0.0, ok,
                       {"horizons": hs, "median_count": med.tolist(), "median_norm": med_r.tolist()})
