"""The transformed process, relative entropies and the absolute-continuity dichotomy.

Under the transformed law the jump kernel of X is (1 + F(x,y)) j(x,y).  Paths
are simulated by thinning: jumps are proposed at ``bound`` times the base
rate and accepted with probability (1 + F)/bound, where bound >= 1 + sup F.
The proposals of each path are drawn from its own stream and are then
processed in lockstep across a batch of paths.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

from .errors import InvalidArgument, InvariantViolation
from .functionals import accumulate, kernel_values
from .kernels import (KernelSpec, entropy_kernel, kernel_field, log1p_minus_ratio,
                      sandwich_constants, tabulate_field, x_minus_log1p)
from .potential import green_potential
from .quadrature import QuadratureSpec, log_radial_integral, panel_rule
from .stable_process import (JumpPath, McEstimate, SmallJumpPolicy, StableParams, _draw_big_jumps,
                             _frozen, combined_std_err, iter_jump_paths, path_seed,
                             small_jump_variance_rate)

__all__ = [
    "TiltedPathConfig", "sample_tilted_path", "sample_tilted_paths", "iter_tilted_paths",
    "horizon_sums", "weighted_base_estimate", "tilted_estimate",
    "EntropyReport", "entropy_P_vs_Ptilde", "entropy_green_profile", "ReverseEntropyReport", "entropy_Ptilde_vs_P",
    "Verdict", "DichotomyReport", "dichotomy_diagnostic",
    "CounterexampleReport", "counterexample_divergence", "borel_cantelli_terms",
]


# ---------------------------------------------------------------------------
# tilted paths


@dataclass(frozen=True)
class TiltedPathConfig:
    base: StableParams
    F: KernelSpec
    horizon: float
    cutoff: float
    policy: SmallJumpPolicy = SmallJumpPolicy.DROP
    dominating_bound: float | None = None

    def __post_init__(self):
        b = self.dominating_bound
        need = 1.0 + max(self.F.upper_bound, 0.0)
        if b is None:
            object.__setattr__(self, "dominating_bound", need)
        elif b < need:
            raise InvalidArgument(f"dominating bound {b} is below 1 + sup F = {need}")
        if not self.F.lower_bound > -1:
            raise InvalidArgument("the transform needs inf F > -1")
        object.__setattr__(self, "policy", SmallJumpPolicy.parse(self.policy))
        if not (self.horizon > 0 and self.cutoff > 0):
            raise InvalidArgument("horizon and cutoff must be positive")


def _proposals(cfg: TiltedPathConfig, seed: int):
    # draw order matches sample_jump_path so that F = 0 with bound 1 reproduces it
    rng = np.random.default_rng(seed)
    times, jumps = _draw_big_jumps(cfg.base, cfg.horizon, cfg.cutoff, rng, cfg.dominating_bound)
    n = times.shape[0]
    gauss = None
    if cfg.policy is SmallJumpPolicy.BROWNIAN_MATCH:
        var = small_jump_variance_rate(cfg.base, cfg.cutoff)
        gaps = np.diff(np.concatenate([[0.0], times, [cfg.horizon]]))
        gauss = rng.standard_normal((n + 1, cfg.base.d)) * np.sqrt(var * gaps)[:, None]
    u = rng.random(n)
    return times, jumps, gauss, u


def sample_tilted_paths(cfg: TiltedPathConfig, start, seeds) -> list[JumpPath]:
    """Tilted paths for the given per-path seeds, processed in lockstep."""
    d = cfg.base.d
    start = np.asarray(start, dtype=float).reshape(-1)
    if start.shape[0] != d:
        raise InvalidArgument("start has the wrong dimension")
    seeds = [int(s) for s in seeds]
    m = len(seeds)
    props = [_proposals(cfg, s) for s in seeds]
    counts = np.array([p[0].shape[0] for p in props])
    K = int(counts.max(initial=0))
    J = np.zeros((m, K, d))
    U = np.ones((m, K))
    for i, (_, jumps, _, u) in enumerate(props):
        J[i, : counts[i]] = jumps
        U[i, : counts[i]] = u
    bm = cfg.policy is SmallJumpPolicy.BROWNIAN_MATCH
    if bm:
        G = np.zeros((m, K + 1, d))
        for i, p in enumerate(props):
            G[i, : counts[i]] = p[2][:-1]
            G[i, K] = p[2][-1]
    x = np.broadcast_to(start, (m, d)).copy()
    pre = np.empty((m, K, d))
    acc = np.zeros((m, K), dtype=bool)
    bound = cfg.dominating_bound
    for k in range(K):
        active = k < counts
        if bm:
            x += np.where(active[:, None], G[:, k], 0.0)
        y = x + J[:, k]
        f = np.asarray(cfg.F.eval(x, y), dtype=float)
        p = (1.0 + f) / bound
        if np.any(active & ((p < 0) | (p > 1.0 + 1e-12))):
            raise InvariantViolation("thinning acceptance probability outside [0, 1]")
        a = active & (U[:, k] < p)
        pre[:, k] = x
        acc[:, k] = a
        x = np.where(a[:, None], y, x)
    out = []
    for i, s in enumerate(seeds):
        n = counts[i]
        sel = acc[i, :n]
        times = props[i][0][sel]
        pr = pre[i, :n][sel]
        po = pr + J[i, :n][sel]
        end = x[i] + (props[i][2][-1] if bm else 0.0)
        var = small_jump_variance_rate(cfg.base, cfg.cutoff) if bm else 0.0
        out.append(JumpPath(_frozen(start), float(cfg.horizon), _frozen(times), _frozen(pr), _frozen(po),
                            _frozen(end), float(cfg.cutoff), cfg.policy, s, var))
    return out


def sample_tilted_path(cfg: TiltedPathConfig, start, stream: int) -> JumpPath:
    """One path of the transformed process; ``stream`` is its integer seed."""
    return sample_tilted_paths(cfg, start, [stream])[0]


def iter_tilted_paths(cfg: TiltedPathConfig, start, master_seed: int, n_paths: int,
                      first_index: int = 0, batch: int = 64) -> Iterator[JumpPath]:
    for b0 in range(first_index, first_index + n_paths, batch):
        b1 = min(b0 + batch, first_index + n_paths)
        yield from sample_tilted_paths(cfg, start, [path_seed(master_seed, i) for i in range(b0, b1)])


# ---------------------------------------------------------------------------
# finite-horizon estimators


def horizon_sums(path: JumpPath, values: np.ndarray, horizons) -> np.ndarray:
    """Partial sums of per-event ``values`` over events with time <= each horizon."""
    c = np.concatenate([[0.0], np.cumsum(values)])
    return c[np.searchsorted(path.times, np.asarray(horizons, dtype=float), side="right")]


def weighted_base_estimate(params: StableParams, F: KernelSpec, h_eval: Callable, g: Callable, x,
                           horizon: float, n_paths: int, master_seed: int, cutoff: float,
                           policy=SmallJumpPolicy.DROP) -> McEstimate:
    """E_P[g(X_T) L_T], the transformed expectation computed under the base law."""
    vals = np.empty(n_paths)
    for i, path in enumerate(iter_jump_paths(params, x, horizon, cutoff, policy, master_seed, n_paths)):
        s = accumulate(path, F, h_eval)
        vals[i] = float(g(path.end[None, :])[0]) * math.exp(s.logL[-1])
    return McEstimate.from_samples(vals)


def tilted_estimate(cfg: TiltedPathConfig, g: Callable, x, n_paths: int, master_seed: int) -> McEstimate:
    """E_P~[g(X_T)] from tilted paths."""
    vals = np.array([float(g(p.end[None, :])[0]) for p in iter_tilted_paths(cfg, x, master_seed, n_paths)])
    return McEstimate.from_samples(vals)


# ---------------------------------------------------------------------------
# entropies


@dataclass(frozen=True)
class EntropyReport:
    pathwise: McEstimate
    green: float
    green_untruncated: float
    horizons: list
    per_horizon: list
    cutoff: float
    quad_tol: float
    green_detail: dict = field(default_factory=dict)

    @property
    def infinite(self) -> bool:
        return not math.isfinite(self.green)

    def agreement(self, k_sigma: float = 3.0) -> dict:
        diff = abs(self.pathwise.mean - self.green) if math.isfinite(self.green) else math.inf
        budget = k_sigma * self.pathwise.std_err + self.quad_tol * abs(self.green) if math.isfinite(self.green) else 0.0
        return {"diff": diff, "budget": budget, "ok": bool(diff <= budget)}

    def to_dict(self) -> dict:
        return {"pathwise": self.pathwise.to_dict(), "green": self.green,
                "green_untruncated": self.green_untruncated, "horizons": self.horizons,
                "per_horizon": [e.to_dict() for e in self.per_horizon], "cutoff": self.cutoff,
                "quad_tol": self.quad_tol, "agreement": self.agreement(), "green_detail": self.green_detail}


def _horizons(base: float, doublings: int) -> list[float]:
    return [base * 2.0 ** k for k in range(doublings + 1)]


def entropy_P_vs_Ptilde(params: StableParams, F: KernelSpec, x, horizon: float, n_paths: int,
                        stream: int, cutoff: float = 1e-2, doublings: int = 4,
                        policy=SmallJumpPolicy.DROP, quad: QuadratureSpec | None = None,
                        field_grid: tuple = (1e-3, 1e5, 161)) -> EntropyReport:
    """H(P_x; P~_x) two ways: jump sums of F - log(1+F) and G h_e(x).

    The pathwise sums run over base paths to ``horizon * 2**doublings`` and
    are reported at every intermediate horizon.  The Green side uses the
    entropy field restricted to jumps longer than ``cutoff`` (matching the
    simulated jumps) and is also reported without the restriction.
    """
    params.require_transient()
    if not F.lower_bound > -1:
        raise InvalidArgument("entropy needs inf F > -1")
    x = np.asarray(x, dtype=float).reshape(-1)
    quad = quad or QuadratureSpec()
    hs = _horizons(horizon, doublings)
    sums = np.zeros((n_paths, len(hs)))
    if not F.is_zero:
        for i, path in enumerate(iter_jump_paths(params, x, hs[-1], cutoff, policy, stream, n_paths)):
            sums[i] = horizon_sums(path, x_minus_log1p(kernel_values(path, F)), hs)
    per_h = [McEstimate.from_samples(sums[:, k]) for k in range(len(hs))]
    if F.is_zero:
        return EntropyReport(per_h[-1], 0.0, 0.0, hs, per_h, cutoff, quad.tol)
    Ke = entropy_kernel(F)
    r0, r1, n = field_grid
    if F.radial:
        tab = tabulate_field(params, Ke, quad, cutoff, r0, r1, n)
        tab_full = tabulate_field(params, Ke, quad, 0.0, r0, r1, n)
        g = green_potential(params, tab, x, quad, full_output=True)
        g_full = green_potential(params, tab_full, x, quad)
    else:
        def h(y):
            return kernel_field(params, Ke, y, quad, cutoff)
        g = green_potential(params, h, x, quad, full_output=True)
        g_full = math.nan
    return EntropyReport(per_h[-1], g.value, g_full, hs, per_h, cutoff, quad.tol, g.to_dict())


def entropy_green_profile(params: StableParams, F: KernelSpec, radii=(0.0, 1.0, 2.0, 4.0, 8.0),
                          quad: QuadratureSpec | None = None, field_grid: tuple = (1e-3, 1e5, 161),
                          rel_slack: float = 1e-3) -> dict:
    """G h_e at |x| = r along the first axis for a radial kernel.

    Finite values that do not increase with |x| are evidence, not a
    certificate, that the supremum over x is finite.  The default quadrature
    is looser than elsewhere: off-centre points see the kink of h at y = 0.
    """
    if not F.radial:
        raise InvalidArgument("the entropy profile needs a radial kernel")
    quad = quad or QuadratureSpec(tol=1e-5)
    r0, r1, n = field_grid
    tab = tabulate_field(params, entropy_kernel(F), quad, 0.0, r0, r1, n)
    e1 = np.eye(params.d)[0]
    vals = [float(green_potential(params, tab, r * e1, quad)) for r in radii]
    finite = all(math.isfinite(v) for v in vals)
    decreasing = finite and all(b <= a * (1 + rel_slack) for a, b in zip(vals, vals[1:]))
    return {"radii": list(map(float, radii)), "green": vals, "finite": finite, "non_increasing": decreasing}


@dataclass(frozen=True)
class ReverseEntropyReport:
    tilted: McEstimate
    weighted: McEstimate | None
    tilted_sq: McEstimate
    c3: float
    c4: float
    horizon: float

    def sandwich_ok(self, k_sigma: float = 3.0) -> bool:
        lo = self.c3 * self.tilted_sq.mean
        hi = self.c4 * self.tilted_sq.mean
        s = k_sigma * combined_std_err(self.tilted, self.tilted_sq)
        return lo - s <= self.tilted.mean <= hi + s

    def cross_ok(self, k_sigma: float = 3.0) -> bool:
        if self.weighted is None:
            return True
        return abs(self.tilted.mean - self.weighted.mean) <= k_sigma * combined_std_err(self.tilted, self.weighted)

    def to_dict(self) -> dict:
        return {"tilted": self.tilted.to_dict(),
                "weighted": None if self.weighted is None else self.weighted.to_dict(),
                "tilted_sq": self.tilted_sq.to_dict(), "c3": self.c3, "c4": self.c4,
                "horizon": self.horizon, "sandwich_ok": self.sandwich_ok(), "cross_ok": self.cross_ok()}


def entropy_Ptilde_vs_P(params: StableParams, F: KernelSpec, x, horizon: float, n_paths: int,
                        stream: int, cutoff: float = 1e-2, policy=SmallJumpPolicy.DROP,
                        h_eval: Callable | None = None) -> ReverseEntropyReport:
    """H(P~_x; P_x) up to ``horizon`` from tilted paths.

    With ``h_eval`` the same quantity is also estimated under the base law
    with Doleans weights L_T.  The sum of F^2 is accumulated on the same
    tilted paths for the scalar sandwich.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    c3, c4 = sandwich_constants(log1p_minus_ratio, F.lower_bound, F.upper_bound) if not F.is_zero else (0.5, 0.5)
    if F.is_zero:
        z = McEstimate(0.0, 0.0, max(n_paths, 2))
        return ReverseEntropyReport(z, z if h_eval else None, z, c3, c4, horizon)
    cfg = TiltedPathConfig(params, F, horizon, cutoff, policy)
    ent = np.empty(n_paths)
    sq = np.empty(n_paths)
    for i, p in enumerate(iter_tilted_paths(cfg, x, stream, n_paths)):
        f = kernel_values(p, F)
        ent[i] = float(np.sum(log1p_minus_ratio(f)))
        sq[i] = float(np.sum(f * f))
    weighted = None
    if h_eval is not None:
        w = np.empty(n_paths)
        for i, path in enumerate(iter_jump_paths(params, x, horizon, cutoff, policy, stream + 1, n_paths)):
            s = accumulate(path, F, h_eval)
            w[i] = float(np.sum(log1p_minus_ratio(s.F))) * math.exp(s.logL[-1])
        weighted = McEstimate.from_samples(w)
    return ReverseEntropyReport(McEstimate.from_samples(ent), weighted, McEstimate.from_samples(sq),
                                c3, c4, horizon)


# ---------------------------------------------------------------------------
# dichotomy


class Verdict(str, enum.Enum):
    CONVERGENT_ALL = "ConvergentAll"
    DIVERGENT_ALL = "DivergentAll"
    MIXED = "Mixed"


@dataclass(frozen=True)
class DichotomyReport:
    kernel: str
    horizons: list
    qv: np.ndarray  # (n_paths, n_horizons) running sum of F^2
    slopes: np.ndarray
    flat: np.ndarray
    fraction_flat: float
    verdict: Verdict
    tol: float
    threshold: float
    tilted: bool = False

    def to_dict(self, include_paths: bool = True) -> dict:
        d = {"kernel": self.kernel, "horizons": self.horizons, "fraction_flat": self.fraction_flat,
             "verdict": self.verdict.value, "tol": self.tol, "threshold": self.threshold,
             "tilted": self.tilted,
             "mean_qv": self.qv.mean(axis=0).tolist() if self.qv.size else [],
             "median_slope": float(np.median(self.slopes)) if self.slopes.size else 0.0}
        if include_paths:
            d["qv"] = self.qv.tolist()
            d["slopes"] = self.slopes.tolist()
        return d


def classify(flat: np.ndarray, threshold: float = 0.05) -> tuple[float, Verdict]:
    frac = float(np.mean(flat)) if flat.size else 1.0
    if frac >= 1.0 - threshold:
        return frac, Verdict.CONVERGENT_ALL
    if frac <= threshold:
        return frac, Verdict.DIVERGENT_ALL
    return frac, Verdict.MIXED


def dichotomy_diagnostic(params: StableParams, F: KernelSpec, x, base_horizon: float, n_paths: int,
                         doublings: int, stream: int, cutoff: float = 1e-2,
                         policy=SmallJumpPolicy.DROP, tol: float = 1e-3, threshold: float = 0.05,
                         tilted: bool = False) -> DichotomyReport:
    """Flatness of the running sum of F^2 under horizon doubling.

    A path is flat when its last-doubling increment is at most
    tol * max(1, value).  The verdict is ConvergentAll when at least a
    fraction 1 - threshold of the paths are flat, DivergentAll when at most
    ``threshold`` are, and Mixed otherwise.
    """
    if doublings < 1:
        raise InvalidArgument("at least one doubling is needed")
    x = np.asarray(x, dtype=float).reshape(-1)
    hs = _horizons(base_horizon, doublings)
    qv = np.zeros((n_paths, len(hs)))
    if not F.is_zero:
        if tilted:
            cfg = TiltedPathConfig(params, F, hs[-1], cutoff, policy)
            paths = iter_tilted_paths(cfg, x, stream, n_paths)
        else:
            paths = iter_jump_paths(params, x, hs[-1], cutoff, policy, stream, n_paths)
        for i, p in enumerate(paths):
            f = kernel_values(p, F)
            qv[i] = horizon_sums(p, f * f, hs)
    inc = qv[:, -1] - qv[:, -2]
    flat = inc <= tol * np.maximum(1.0, qv[:, -1])
    lk = np.log2(np.asarray(hs) / hs[0])
    slopes = np.polyfit(lk, qv.T, 1)[0] if n_paths else np.zeros(0)
    frac, verdict = classify(flat, threshold)
    return DichotomyReport(F.name, hs, qv, np.atleast_1d(slopes), flat, frac, verdict, tol, threshold, tilted)


# ---------------------------------------------------------------------------
# counterexample


def borel_cantelli_terms(params: StableParams, gamma: float, n_balls: int) -> dict:
    """(r_n/|x_n|)^(d-alpha) per ball, the proof's per-ball bound, and their sums."""
    from .kernels import counterexample_geometry

    centers, radii = counterexample_geometry(params, gamma, n_balls)
    dist = np.linalg.norm(centers, axis=1)
    e = params.d - params.alpha
    terms = (radii / dist) ** e
    bound = 2.0 ** ((1.0 - np.arange(1, n_balls + 1)) * e)
    return {"terms": terms.tolist(), "sum": float(terms.sum()), "bound": bound.tolist(),
            "centers": dist.tolist(), "radii": radii.tolist()}


@dataclass(frozen=True)
class CounterexampleReport:
    contributions: list
    lower_bound_ok: bool
    ratio_max_min: float
    kernel: str

    def to_dict(self) -> dict:
        return {"contributions": self.contributions, "partial_sums": np.cumsum(self.contributions).tolist(),
                "lower_bound_ok": self.lower_bound_ok, "ratio_max_min": self.ratio_max_min,
                "kernel": self.kernel}


def _local_h_1d(params, K, n, rn, s, quad, transform):
    # c int_{|u| <= 1} transform(K(y, y+u)) |u|^(-1-alpha) du at y = x_n + s, exact in the jump u
    a = params.alpha
    p = K.near_diag_exponent

    def g(t, q, sign):
        u = sign * np.exp(t)
        vals = transform(K.local_eval(n, np.full((u.size, 1), s), u[:, None]))
        return (vals * np.exp(-a * t))[:, None]

    total = 0.0
    for sign in (1.0, -1.0):
        brk = []
        for edge in (rn - s, -rn - s):
            if sign * edge > 0 and abs(edge) < 1:
                brk.append(math.log(abs(edge)))
        val, _ = log_radial_integral(lambda t, q: g(t, q, sign), math.log(quad.r_min), 0.0, brk, quad,
                                     rate_lo=p - a)
        total += float(val[0])
    return params.levy_const * total


def counterexample_divergence(params: StableParams, gamma: float, beta: float, n_balls: int,
                              quad: QuadratureSpec | None = None, kernel: str = "counterexample",
                              transform: Callable | None = None) -> CounterexampleReport:
    """Per-ball contributions int_{B(x_n, r_n)} G(0,y) h(y) dy in d = 1.

    ``kernel`` is "counterexample" (h of Phi) or "theorem3" (with
    ``transform`` applied to the kernel values, e.g. F - log(1+F) for the
    entropy field).  Each ball is integrated in coordinates centred at x_n.
    """
    from .kernels import counterexample_geometry, counterexample_kernel, theorem3_kernel

    if params.d != 1:
        raise InvalidArgument("per-ball quadrature is implemented for d = 1")
    quad = quad or QuadratureSpec(tol=1e-6, max_refine=5)
    if n_balls == 0:
        return CounterexampleReport([], True, 1.0, kernel)
    if kernel == "counterexample":
        K = counterexample_kernel(params, gamma, beta, n_balls)
    elif kernel == "theorem3":
        K = theorem3_kernel(params, gamma, beta, n_balls)
    else:
        raise InvalidArgument(f"unknown counterexample kernel {kernel!r}")
    transform = transform or (lambda v: v)
    g_par = 2 * gamma if kernel == "theorem3" else gamma
    centers, radii = counterexample_geometry(params, g_par, n_balls)
    contrib = []
    order = 8
    for n in range(n_balls):
        xn, rn = float(centers[n, 0]), float(radii[n])
        # piecewise-smooth in s: boundary strips of width 1 and the interior
        edges = [-rn, -rn + 1.0, rn - 1.0, rn]
        s_nodes, s_w = panel_rule(np.array(edges), order, max(rn / 8.0, 0.25))
        hv = np.array([_local_h_1d(params, K, n, rn, s, quad, transform) for s in s_nodes])
        gv = params.green_const * np.abs(xn + s_nodes) ** (params.alpha - 1.0)
        contrib.append(float(np.sum(s_w * gv * hv)))
    c = np.asarray(contrib)
    ok = bool(np.all(c > 0.5 * c[0]))
    return CounterexampleReport([float(v) for v in c], ok, float(c.max() / c.min()), kernel)
