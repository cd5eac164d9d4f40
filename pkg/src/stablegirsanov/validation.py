"""Cross-estimator consistency battery.

Every check pairs two independent routes to the same number and returns a
plain dict with the two values, the tolerance used and a pass flag.
"""

from __future__ import annotations

import math

import numpy as np

from .functionals import accumulate, compensator_field, doleans_exponential_pair_check, inverse_density_check
from .girsanov import TiltedPathConfig, tilted_estimate, weighted_base_estimate
from .kernels import KernelSpec, fuchsian_kernel, scaled_kernel, zero_kernel
from .potential import ball_green, poisson_constant_report, poisson_mass
from .quadrature import panel_rule, sphere_rule
from .stable_process import (Ball, McEstimate, SmallJumpPolicy, StableParams, combined_std_err, exit_data,
                             iter_jump_paths, path_stream, sample_increments)

__all__ = [
    "char_function_check", "levy_system_check", "doleans_check", "importance_sampling_check",
    "poisson_normalization_check", "occupation_check", "ball_occupation_quadrature", "run_battery",
    "MATRICES",
]

MATRICES = {
    "default": [(1, 0.5), (3, 1.0)],
    "minimal": [(1, 0.5)],
    "empty": [],
}


def _row(name, params, lhs, rhs, tol, passed, **extra):
    return {"check": name, "d": params.d, "alpha": params.alpha, "lhs": lhs, "rhs": rhs,
            "tol": tol, "passed": bool(passed), **extra}


def char_function_check(params: StableParams, xis=(0.5, 1.0, 2.0), t: float = 1.0, n: int = 100_000,
                        n_jump: int = 20_000, cutoff: float = 1e-3, seed: int = 1) -> list[dict]:
    """Empirical E cos(xi X_t) against exp(-t |xi|^alpha) for both samplers."""
    out = []
    e1 = np.eye(params.d)[0]
    X = sample_increments(params, t, n, path_stream(seed, 0))
    ends = np.array([p.end for p in iter_jump_paths(params, np.zeros(params.d), t, cutoff,
                                                    SmallJumpPolicy.DROP, seed + 1, n_jump)])
    for xi in xis:
        target = math.exp(-t * abs(xi) ** params.alpha)
        est = McEstimate.from_samples(np.cos(xi * X @ e1))
        out.append(_row("char_function_exact", params, est.mean, target, 4 * est.std_err,
                        abs(est.mean - target) <= 4 * est.std_err, xi=xi, std_err=est.std_err))
        est = McEstimate.from_samples(np.cos(xi * ends @ e1))
        out.append(_row("char_function_jump", params, est.mean, target, 6 * est.std_err,
                        abs(est.mean - target) <= 6 * est.std_err, xi=xi, std_err=est.std_err, cutoff=cutoff))
    return out


def levy_system_check(params: StableParams, F: KernelSpec, horizon: float = 10.0, n: int = 10_000,
                      cutoff: float = 1e-3, seed: int = 2) -> dict:
    """E[A_T] against E[int_0^T h(X_s) ds] on the same paths (h at the same cutoff)."""
    h = compensator_field(params, F, cutoff)
    A = np.empty(n)
    C = np.empty(n)
    for i, p in enumerate(iter_jump_paths(params, np.zeros(params.d), horizon, cutoff, SmallJumpPolicy.DROP, seed, n)):
        s = accumulate(p, F, h)
        A[i], C[i] = s.A[-1], s.compensator[-1]
    a, c = McEstimate.from_samples(A), McEstimate.from_samples(C)
    tol = 3 * combined_std_err(a, c)
    return _row("levy_system", params, a.mean, c.mean, tol, abs(a.mean - c.mean) <= tol, kernel=F.name,
                horizon=horizon, n=n)


def doleans_check(params: StableParams, F: KernelSpec, horizon: float = 10.0, n: int = 1000,
                  cutoff: float = 1e-2, seed: int = 3) -> list[dict]:
    """Pathwise E(M)E(-M) = E(-[M]) and L~^{F_1} = 1/L^F; max relative error over paths."""
    h = compensator_field(params, F, cutoff)
    pair = inv = 0.0
    for p in iter_jump_paths(params, np.zeros(params.d), horizon, cutoff, SmallJumpPolicy.DROP, seed, n):
        pair = max(pair, doleans_exponential_pair_check(p, F, h).rel_err)
        inv = max(inv, inverse_density_check(p, F, h).rel_err)
    return [_row("doleans_pair", params, float(pair), 0.0, 1e-10, pair < 1e-10, kernel=F.name, n=n),
            _row("inverse_density", params, float(inv), 0.0, 1e-10, inv < 1e-10, kernel=F.name, n=n)]


def _halfspace(y):
    return (np.atleast_2d(y)[:, 0] > 0.5).astype(float)


def _expdecay(y):
    return np.exp(-np.linalg.norm(np.atleast_2d(y), axis=1))


def importance_sampling_check(params: StableParams, F: KernelSpec, horizon: float = 2.0, n: int = 10_000,
                              cutoff: float = 1e-2, seed: int = 4) -> list[dict]:
    """E_P~[g(X_T)] by tilted paths against E_P[g(X_T) L_T] by base paths."""
    h = compensator_field(params, F, cutoff)
    cfg = TiltedPathConfig(params, F, horizon, cutoff)
    out = []
    for name, g in (("halfspace", _halfspace), ("exp_decay", _expdecay)):
        a = tilted_estimate(cfg, g, np.zeros(params.d), n, seed)
        b = weighted_base_estimate(params, F, h, g, np.zeros(params.d), horizon, n, seed + 100, cutoff)
        tol = 3 * combined_std_err(a, b)
        out.append(_row("importance_sampling", params, a.mean, b.mean, tol, abs(a.mean - b.mean) <= tol,
                        g=name, kernel=F.name, std_err_tilted=a.std_err, std_err_weighted=b.std_err))
    return out


def poisson_normalization_check(params: StableParams) -> list[dict]:
    rep = poisson_constant_report(params)
    out = []
    for r, x in ((1.0, np.zeros(params.d)), (2.0, 0.7 * np.eye(params.d)[0])):
        m = poisson_mass(params, r, x)
        out.append(_row("poisson_mass", params, m, 1.0, 1e-3, abs(m - 1.0) <= 1e-3, r=r, x=x.tolist(),
                        printed_constant_report=rep))
    return out


def ball_occupation_quadrature(params: StableParams, x, s_center, s_radius: float, order: int = 16) -> float:
    """int over S = B(s_center, s_radius) of G_B(x, y) dy, B the unit ball; S inside B and x at the centre or outside S."""
    c = np.asarray(s_center, dtype=float)
    # r = s v^2 absorbs the |y - x|^(alpha-d) singularity when x is the centre
    v, wv = panel_rule(np.array([0.0, 1.0]), order, 0.5)
    rr, wr = s_radius * v * v, 2.0 * s_radius * v * wv
    if params.d == 1:
        dirs, wd = sphere_rule(1, 0, 0)
    else:
        dirs, wd = sphere_rule(params.d, order, 2 * order)
    y = c[None, None, :] + rr[:, None, None] * dirs[None, :, :]
    g = ball_green(params, np.zeros(params.d), 1.0, np.broadcast_to(np.asarray(x, float), y.shape), y)
    return float(np.einsum("r,rk,k->", wr * rr ** (params.d - 1), g, wd))


def occupation_check(params: StableParams, n: int = 4000, cutoff: float = 1e-3, seed: int = 5,
                     s_center=None, s_radius: float = 0.5, horizon: float = 6.0) -> dict:
    """Monte Carlo occupation time of a small ball before leaving the unit ball against G_B quadrature."""
    params.require_transient()
    s_center = np.zeros(params.d) if s_center is None else np.asarray(s_center, dtype=float)
    quad = ball_occupation_quadrature(params, np.zeros(params.d), s_center, s_radius)
    B = Ball(tuple(np.zeros(params.d)), 1.0)
    S = Ball(tuple(s_center), s_radius)
    occ = np.empty(n)
    for i, p in enumerate(iter_jump_paths(params, np.zeros(params.d), horizon, cutoff,
                                          SmallJumpPolicy.DROP, seed, n)):
        tt, xx = p.skeleton()
        ex = exit_data(p, B)
        tau = ex.tau if ex.exited else horizon
        # piecewise constant between jumps; stop at the exit time
        dt = np.diff(np.minimum(np.concatenate([tt, [horizon]]), tau))
        occ[i] = float(np.sum(dt * S.contains(xx)))
    est = McEstimate.from_samples(occ)
    tol = 3 * est.std_err
    return _row("ball_green_occupation", params, est.mean, quad, tol, abs(est.mean - quad) <= tol,
                s_center=s_center.tolist(), s_radius=s_radius, std_err=est.std_err)


def run_battery(matrix: str = "default", kernel: KernelSpec | None = None, scale: float = 1.0,
                points=None) -> list[dict]:
    """Run the battery on every matrix point (or on ``points``); ``scale`` shrinks sample sizes."""
    rows: list[dict] = []
    for d, a in (MATRICES[matrix] if points is None else points):
        p = StableParams(d, a)
        F = kernel if kernel is not None else fuchsian_kernel(1.0, 1.0)
        Fd = scaled_kernel(F, 0.9 / F.sup_abs()) if F.sup_abs() > 0 else zero_kernel()
        k = max(scale, 1e-3)
        rows += char_function_check(p, n=int(100_000 * k), n_jump=int((20_000 if d == 1 else 4_000) * k))
        rows.append(levy_system_check(p, F, horizon=10.0 if d == 1 else 2.0,
                                      n=int((10_000 if d == 1 else 4_000) * k), cutoff=1e-3 if d == 1 else 1e-2))
        rows += doleans_check(p, Fd, n=int(1000 * k))
        rows += importance_sampling_check(p, F, horizon=2.0, n=int((10_000 if d == 1 else 2_000) * k))
        rows += poisson_normalization_check(p)
        if p.transient and d == 3:
            rows.append(occupation_check(p, n=int(4000 * k)))
    return rows
