"""Symmetric jump kernels F(x, y) and the scalar fields they induce.

A kernel is wrapped in :class:`KernelSpec`, which carries the pointwise
bounds and class tags used by the checks downstream.  The fields

    h(x)   = int F(x,z) j(x,z) dz
    h_e(x) = int (F - log(1+F))(x,z) j(x,z) dz
    h_1(x) = int ((1+F) log(1+F) - F)(x,z) j(x,z) dz

with j(x,z) = c |x-z|^(-d-alpha) are computed by polar quadrature around x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import InvalidArgument, NumericFailure
from .quadrature import QuadratureSpec, log_radial_integral, sphere_rule
from .stable_process import StableParams

__all__ = [
    "ICBeta", "Fuchsian", "Counterexample", "Theorem3",
    "KernelSpec", "zero_kernel", "fuchsian_kernel", "capped_fuchsian_kernel",
    "annulus_kernel", "counterexample_kernel", "theorem3_kernel", "scaled_kernel",
    "derived_kernel", "entropy_kernel", "entropy1_kernel", "square_kernel",
    "inverse_kernel", "tilted_inverse_kernel",
    "x_minus_log1p", "one_plus_x_log1p_minus_x", "log1p_minus_ratio",
    "kernel_field", "h_field", "entropy_h_field", "entropy_h1_field",
    "RadialField", "tabulate_field", "counterexample_geometry",
    "sandwich_constants", "membership_report", "make_kernel",
]


# ---------------------------------------------------------------------------
# class tags


@dataclass(frozen=True)
class ICBeta:
    C: float
    beta: float


@dataclass(frozen=True)
class Fuchsian:
    C: float
    beta: float


@dataclass(frozen=True)
class Counterexample:
    gamma: float
    beta: float


@dataclass(frozen=True)
class Theorem3:
    gamma: float
    beta: float


def _tag_dict(tag) -> dict:
    return {"tag": type(tag).__name__, **tag.__dict__}


# ---------------------------------------------------------------------------
# stable scalar helpers


def _series(x, coef):
    # sum_k coef[k] x^k by Horner, coef[0] is the x^0 coefficient
    out = np.zeros_like(x)
    for c in coef[::-1]:
        out = out * x + c
    return out


_K = np.arange(2, 20)
_C_ENT = np.concatenate([[0.0, 0.0], (-1.0) ** _K / _K])
_C_ENT1 = np.concatenate([[0.0, 0.0], (-1.0) ** _K / (_K * (_K - 1))])
_C_REV = np.concatenate([[0.0, 0.0], (-1.0) ** _K * (_K - 1) / _K])


def x_minus_log1p(x):
    """x - log(1+x) without cancellation near 0."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 0.1
    return np.where(small, _series(np.where(small, x, 0.0), _C_ENT), x - np.log1p(np.where(small, 0.0, x)))


def one_plus_x_log1p_minus_x(x):
    """(1+x) log(1+x) - x without cancellation near 0."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 0.1
    xs = np.where(small, 0.0, x)
    return np.where(small, _series(np.where(small, x, 0.0), _C_ENT1), (1 + xs) * np.log1p(xs) - xs)


def log1p_minus_ratio(x):
    """log(1+x) - x/(1+x) without cancellation near 0."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 0.1
    xs = np.where(small, 0.0, x)
    return np.where(small, _series(np.where(small, x, 0.0), _C_REV), np.log1p(xs) - xs / (1 + xs))


# ---------------------------------------------------------------------------
# kernel container


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """A bounded symmetric kernel with metadata.

    ``radial`` means F(x,y) depends on x, y only through |x|, |y| and |x-y|,
    so its fields are radial functions.  ``near_diag_exponent`` is the power
    p with |F(x,y)| ~ |x-y|^p near the diagonal and ``support_radius`` bounds
    |x-y| on the support when finite.  ``breaks(x)`` lists the distances from
    x at which F(x, .) is not smooth.
    """

    name: str
    eval: Callable[[np.ndarray, np.ndarray], np.ndarray]
    lower_bound: float
    upper_bound: float
    class_tags: frozenset = frozenset()
    params: dict = field(default_factory=dict)
    vanishes_on_diagonal: bool = True
    radial: bool = False
    near_diag_exponent: float | None = None
    support_radius: float | None = None
    breaks: Callable[[np.ndarray], list] | None = None
    is_zero: bool = False
    local_eval: Callable | None = None

    def __post_init__(self):
        if not self.lower_bound > -1:
            raise InvalidArgument(f"kernel {self.name}: lower bound must exceed -1")

    def __call__(self, x, y):
        return self.eval(np.asarray(x, dtype=float), np.asarray(y, dtype=float))

    def sup_abs(self) -> float:
        return max(abs(self.lower_bound), abs(self.upper_bound))

    def tag(self, kind):
        for t in self.class_tags:
            if isinstance(t, kind):
                return t
        return None

    def to_dict(self) -> dict:
        return {"name": self.name, "params": dict(self.params),
                "lower_bound": self.lower_bound, "upper_bound": self.upper_bound,
                "class_tags": sorted((_tag_dict(t) for t in self.class_tags), key=lambda t: t["tag"])}


def _norm(x):
    return np.sqrt(np.sum(np.square(x), axis=-1))


def zero_kernel() -> KernelSpec:
    return KernelSpec("zero", lambda x, y: np.zeros(np.broadcast_shapes(x.shape, y.shape)[:-1]),
                      0.0, 0.0, frozenset(), {}, radial=True, near_diag_exponent=math.inf,
                      support_radius=0.0, is_zero=True)


def fuchsian_kernel(C: float, beta: float) -> KernelSpec:
    """F(x,y) = C |x-y|^beta / (1 + |x|^beta + |y|^beta)."""
    if not (C > 0 and beta > 0):
        raise InvalidArgument("fuchsian kernel needs C > 0 and beta > 0")

    def ev(x, y):
        return C * _norm(x - y) ** beta / (1.0 + _norm(x) ** beta + _norm(y) ** beta)

    return KernelSpec("fuchsian", ev, 0.0, float(C) * max(1.0, 2.0 ** (beta - 1.0)),
                      frozenset({ICBeta(C, beta), Fuchsian(C, beta)}), {"C": C, "beta": beta},
                      radial=True, near_diag_exponent=beta, breaks=lambda x: [float(np.linalg.norm(x))])


def capped_fuchsian_kernel(C: float, beta: float) -> KernelSpec:
    """F(x,y) = C (|x-y| ^ 1)^beta / (1 + |x|^beta + |y|^beta).

    A member of the Fuchsian class whose jump sums stay finite along
    transient paths; used where a kernel satisfying the a.s. finiteness
    hypothesis is required.
    """
    if not (C > 0 and beta > 0):
        raise InvalidArgument("capped fuchsian kernel needs C > 0 and beta > 0")

    def ev(x, y):
        r = np.minimum(_norm(x - y), 1.0)
        return C * r ** beta / (1.0 + _norm(x) ** beta + _norm(y) ** beta)

    return KernelSpec("capped_fuchsian", ev, 0.0, float(C) / (1.0 + min(1.0, 2.0 ** (1.0 - beta))),
                      frozenset({ICBeta(C, beta), Fuchsian(C, beta)}), {"C": C, "beta": beta},
                      radial=True, near_diag_exponent=beta,
                      breaks=lambda x: [1.0, float(np.linalg.norm(x))])


def annulus_kernel(value: float = 0.5, r_in: float = 1.0, r_out: float = 2.0) -> KernelSpec:
    """Constant ``value`` on {r_in < |x-y| < r_out}, zero elsewhere."""
    if not (value > -1 and 0 < r_in < r_out):
        raise InvalidArgument("annulus kernel needs value > -1 and 0 < r_in < r_out")

    def ev(x, y):
        r = _norm(x - y)
        return np.where((r > r_in) & (r < r_out), value, 0.0)

    return KernelSpec("annulus", ev, min(0.0, value), max(0.0, value), frozenset(),
                      {"value": value, "r_in": r_in, "r_out": r_out}, radial=True,
                      near_diag_exponent=math.inf, support_radius=r_out,
                      breaks=lambda x: [r_in, r_out])


def scaled_kernel(F: KernelSpec, factor: float) -> KernelSpec:
    """factor * F, with bounds and tags rescaled."""
    lo, hi = sorted((factor * F.lower_bound, factor * F.upper_bound))
    tags = set()
    for t in F.class_tags:
        if isinstance(t, (ICBeta, Fuchsian)):
            tags.add(type(t)(abs(factor) * t.C, t.beta))
        else:
            tags.add(t)
    return KernelSpec(F.name, lambda x, y: factor * F.eval(x, y), lo, hi, frozenset(tags),
                      {**F.params, "scale": factor}, radial=F.radial,
                      near_diag_exponent=F.near_diag_exponent, support_radius=F.support_radius,
                      breaks=F.breaks, is_zero=F.is_zero or factor == 0)


# ---------------------------------------------------------------------------
# counterexample construction


def counterexample_geometry(params: StableParams, gamma: float, n_balls: int):
    """Centres |x_n| = 2^(n d/(alpha-gamma)) on the first axis and radii 2^-n |x_n| + 1."""
    d, a = params.d, params.alpha
    n = np.arange(1, n_balls + 1, dtype=float)
    dist = 2.0 ** (n * d / (a - gamma))
    radii = 2.0 ** (-n) * dist + 1.0
    centers = np.zeros((n_balls, d))
    centers[:, 0] = dist
    return centers, radii


def _check_counterexample(params: StableParams, gamma: float, beta: float):
    a = params.alpha
    if not (0 < gamma < a < beta):
        raise InvalidArgument("counterexample kernel needs 0 < gamma < alpha < beta")
    if not a - gamma < 0.5:
        raise InvalidArgument("counterexample kernel needs alpha - gamma < 1/2")
    params.require_transient()


def counterexample_kernel(params: StableParams, gamma: float, beta: float, n_balls: int = 5) -> KernelSpec:
    """Phi(y,z) = |y-z|^beta / (|y|^gamma + |z|^gamma) inside a common ball, |y-z| <= 1."""
    _check_counterexample(params, gamma, beta)
    centers, radii = counterexample_geometry(params, gamma, n_balls)

    def ev(y, z):
        shape = np.broadcast_shapes(y.shape, z.shape)[:-1]
        same = np.zeros(shape, dtype=bool)
        for c, r in zip(centers, radii):
            same |= (_norm(y - c) < r) & (_norm(z - c) < r)
        dyz = _norm(y - z)
        val = dyz ** beta / (_norm(y) ** gamma + _norm(z) ** gamma)
        return np.where(same & (dyz <= 1.0), val, 0.0)

    def local(n, s, u):
        # ball n (0-based), y = x_n + s, z = y + u; exact in the jump u
        c, r = centers[n], radii[n]
        y = c + s
        z = y + u
        inside = (_norm(s) < r) & (_norm(s + u) < r)
        du = _norm(u)
        val = du ** beta / (_norm(y) ** gamma + _norm(z) ** gamma)
        return np.where(inside & (du <= 1.0), val, 0.0)

    def brk(x):
        x = np.asarray(x, dtype=float)
        out = [1.0]
        for c, r in zip(centers, radii):
            dc = float(_norm(x - c))
            for b in (r - dc, r + dc, dc - r):
                if b > 0:
                    out.append(b)
        return out

    upper = float(np.max(1.0 / (2.0 * np.maximum(centers[:, 0] - radii, 1e-300) ** gamma)))
    return KernelSpec("counterexample", ev, 0.0, min(1.0, upper),
                      frozenset({ICBeta(1.0, beta), Counterexample(gamma, beta)}),
                      {"gamma": gamma, "beta": beta, "n_balls": n_balls},
                      radial=False, near_diag_exponent=beta, support_radius=1.0, breaks=brk,
                      local_eval=local)


def theorem3_kernel(params: StableParams, gamma: float, beta: float, n_balls: int = 5) -> KernelSpec:
    """F = sqrt(Phi)/8 with Phi the counterexample kernel built from (2 gamma, 2 beta)."""
    a = params.alpha
    if not (0 < 2 * gamma < a < 2 * beta):
        raise InvalidArgument("theorem-3 kernel needs 0 < 2 gamma < alpha < 2 beta")
    _check_counterexample(params, 2 * gamma, 2 * beta)
    phi = counterexample_kernel(params, 2 * gamma, 2 * beta, n_balls)

    def ev(x, y):
        return np.sqrt(phi.eval(x, y)) / 8.0

    def local(n, s, u):
        return np.sqrt(phi.local_eval(n, s, u)) / 8.0

    return KernelSpec("theorem3", ev, 0.0, math.sqrt(phi.upper_bound) / 8.0,
                      frozenset({ICBeta(0.125, beta), Theorem3(gamma, beta)}),
                      {"gamma": gamma, "beta": beta, "n_balls": n_balls},
                      radial=False, near_diag_exponent=beta, support_radius=1.0, breaks=phi.breaks,
                      local_eval=local)


# ---------------------------------------------------------------------------
# kernels derived pointwise from F


def derived_kernel(F: KernelSpec, fn, name: str, exponent_factor: float = 1.0) -> KernelSpec:
    """Kernel (x,y) -> fn(F(x,y)); ``fn`` must be monotone on [inf F, sup F]."""
    a, b = fn(np.array([F.lower_bound, F.upper_bound]))
    lo, hi = float(min(a, b, 0.0)), float(max(a, b, 0.0))
    p = None if F.near_diag_exponent is None else F.near_diag_exponent * exponent_factor

    def local(n, s, u):
        return fn(F.local_eval(n, s, u))

    return KernelSpec(f"{name}[{F.name}]", lambda x, y: fn(F.eval(x, y)), lo, hi, frozenset(),
                      {"base": F.name, **F.params}, radial=F.radial, near_diag_exponent=p,
                      support_radius=F.support_radius, breaks=F.breaks, is_zero=F.is_zero,
                      local_eval=local if F.local_eval else None)


def entropy_kernel(F):
    return derived_kernel(F, x_minus_log1p, "entropy", 2.0)


def entropy1_kernel(F):
    return derived_kernel(F, one_plus_x_log1p_minus_x, "entropy1", 2.0)


def square_kernel(F):
    return derived_kernel(F, np.square, "square", 2.0)


def inverse_kernel(F):
    """F_1 = -F/(1+F)."""
    return derived_kernel(F, lambda f: -f / (1.0 + f), "inverse", 1.0)


def tilted_inverse_kernel(F):
    """F_1 (1+F), the density of F_1 against the tilted Levy kernel (1+F) j."""
    return derived_kernel(F, lambda f: (-f / (1.0 + f)) * (1.0 + f), "tilted_inverse", 1.0)


# ---------------------------------------------------------------------------
# fields


def kernel_field(params: StableParams, K: KernelSpec, x, quad: QuadratureSpec | None = None,
                 cutoff: float = 0.0) -> np.ndarray:
    """c int_{|z-x|>cutoff} K(x,z) |x-z|^(-d-alpha) dz for each row of ``x``.

    Raises NumericFailure (carrying the partial values) if refinement does not
    reach ``quad.tol``.
    """
    quad = quad or QuadratureSpec()
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[-1] != params.d:
        raise InvalidArgument("point dimension does not match params.d")
    m = x.shape[0]
    if K.is_zero:
        return np.zeros(m)
    a, d = params.alpha, params.d
    p = K.near_diag_exponent
    if cutoff < quad.r_min:
        if p is None or not p > a:
            raise InvalidArgument(f"kernel {K.name} is not integrable at the diagonal (exponent {p} <= alpha)")
        t_lo, rate_lo = math.log(quad.r_min), (None if math.isinf(p) else p - a)
    else:
        t_lo, rate_lo = math.log(cutoff), None
    if K.support_radius is not None:
        if K.support_radius <= max(cutoff, 0.0):
            return np.zeros(m)
        t_hi, rate_hi = math.log(K.support_radius), None
    else:
        t_hi, rate_hi = math.log(quad.r_max), a
    out = np.empty(m)
    for i in range(m):
        xi = x[i]
        breaks = [math.log(b) for b in (K.breaks(xi) if K.breaks else []) if b > 0]

        def g(t, q, xi=xi):
            if d == 1:
                dirs, w = sphere_rule(1, 0, 0)
            elif K.radial:
                dirs, w = sphere_rule(d, q.n_angular, 0, axis=xi, axisymmetric=True)
            else:
                dirs, w = sphere_rule(d, q.n_angular, q.n_azimuth, axis=xi)
            r = np.exp(t)
            z = xi[None, None, :] + r[:, None, None] * dirs[None, :, :]
            vals = K.eval(np.broadcast_to(xi, z.shape), z)
            return ((vals @ w) * r ** (-a))[:, None]

        try:
            val, _ = log_radial_integral(g, t_lo, t_hi, breaks, quad, rate_lo, rate_hi)
        except NumericFailure as exc:
            partial = out.copy()
            partial[i] = float(np.ravel(exc.partial)[0]) * params.levy_const
            raise NumericFailure(f"field quadrature failed at x={xi.tolist()}", partial[: i + 1], exc.error)
        out[i] = params.levy_const * val[0]
    return out


def h_field(params, F, x, quad=None, cutoff=0.0):
    """h(x) = int F(x,z) j(x,z) dz (jumps shorter than ``cutoff`` excluded)."""
    if not F.is_zero:
        tag = F.tag(ICBeta)
        if tag is not None and not tag.beta > params.alpha and cutoff == 0.0:
            raise InvalidArgument("h_field needs F in I(C, beta) with beta > alpha")
    return kernel_field(params, F, x, quad, cutoff)


def entropy_h_field(params, F, x, quad=None, cutoff=0.0):
    """int (F - log(1+F))(x,z) j(x,z) dz."""
    return kernel_field(params, entropy_kernel(F), x, quad, cutoff)


def entropy_h1_field(params, F, x, quad=None, cutoff=0.0):
    """int ((1+F) log(1+F) - F)(x,z) j(x,z) dz."""
    return kernel_field(params, entropy1_kernel(F), x, quad, cutoff)


@dataclass(frozen=True, eq=False)
class RadialField:
    """Radial scalar field interpolated monotonically in log r.

    Below the first radius the field is held constant; beyond the last it is
    continued as a power law fitted to the last two nodes.
    """

    radii: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "_interp", PchipInterpolator(np.log(self.radii), self.values))
        r1, r2 = self.radii[-2:]
        v1, v2 = self.values[-2:]
        slope = math.log(v2 / v1) / math.log(r2 / r1) if v1 > 0 and v2 > 0 else 0.0
        object.__setattr__(self, "_tail_slope", min(slope, 0.0))

    def radial(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        lr = np.log(np.clip(r, self.radii[0], self.radii[-1]))
        out = self._interp(lr)
        far = r > self.radii[-1]
        if np.any(far):
            out = np.where(far, self.values[-1] * (np.maximum(r, 1e-300) / self.radii[-1]) ** self._tail_slope, out)
        return out

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.radial(_norm(x))

    def scaled(self, factor: float) -> "RadialField":
        return RadialField(self.radii, factor * self.values)


def tabulate_field(params: StableParams, K: KernelSpec, quad: QuadratureSpec | None = None,
                   cutoff: float = 0.0, r_min: float = 1e-3, r_max: float = 1e4,
                   n: int = 121) -> RadialField:
    """Tabulate the field of a radial kernel on a log-spaced radius grid."""
    if not K.radial:
        raise InvalidArgument("tabulation needs a radial kernel")
    radii = np.geomspace(r_min, r_max, n)
    pts = np.zeros((n, params.d))
    pts[:, 0] = radii
    return RadialField(radii, kernel_field(params, K, pts, quad, cutoff))


# ---------------------------------------------------------------------------
# scalar sandwich constants and randomized class checks


def sandwich_constants(fn, lo: float, hi: float, n: int = 20001) -> tuple[float, float]:
    """min and max of fn(f)/f^2 over [lo, hi] (the f -> 0 limit included)."""
    f = np.linspace(lo, hi, n)
    f = f[np.abs(f) > 1e-6]
    f = np.concatenate([f, [lo, hi]]) if hi > lo else f
    f = f[np.abs(f) > 1e-6]
    ratio = fn(f) / f ** 2
    near0 = fn(np.array([1e-6, -1e-6])) / 1e-12
    vals = np.concatenate([ratio, near0]) if lo < 0 < hi or lo == 0 or hi == 0 else ratio
    return float(vals.min()), float(vals.max())


def membership_report(F: KernelSpec, d: int, n_pairs: int, rng: np.random.Generator,
                      scale: float = 5.0, center=None, pairs=None) -> dict:
    """Randomized checks of symmetry, diagonal vanishing, bounds and class tags."""
    if pairs is None:
        c = np.zeros(d) if center is None else np.asarray(center, dtype=float)
        x = c + scale * rng.standard_normal((n_pairs, d))
        y = x + rng.standard_normal((n_pairs, d)) * rng.choice([0.01, 0.3, 1.0, 3.0], (n_pairs, 1))
    else:
        x, y = pairs
    fxy, fyx, fxx = F(x, y), F(y, x), F(x, x)
    dxy = _norm(x - y)
    rep = {
        "symmetric": bool(np.allclose(fxy, fyx, rtol=1e-12, atol=0.0)),
        "diagonal_zero": bool(np.all(fxx == 0)),
        "lower_bound_ok": bool(np.all(fxy >= F.lower_bound - 1e-12)) and F.lower_bound > -1,
        "upper_bound_ok": bool(np.all(fxy <= F.upper_bound + 1e-12)),
    }
    for t in F.class_tags:
        if isinstance(t, ICBeta):
            rep["icbeta_ok"] = bool(np.all(np.abs(fxy) <= t.C * dxy ** t.beta * (1 + 1e-12)))
        if isinstance(t, Fuchsian):
            bound = t.C * dxy ** t.beta / (1 + _norm(x) ** t.beta + _norm(y) ** t.beta)
            rep["fuchsian_ok"] = bool(np.all(fxy <= bound * (1 + 1e-12)))
    return rep


# ---------------------------------------------------------------------------
# registry for configs


def make_kernel(name: str, kparams: dict, params: StableParams) -> KernelSpec:
    kp = dict(kparams or {})
    if name == "zero":
        return zero_kernel()
    if name == "fuchsian":
        return fuchsian_kernel(kp.get("C", 1.0), kp.get("beta", 1.0))
    if name == "capped_fuchsian":
        return capped_fuchsian_kernel(kp.get("C", 1.0), kp.get("beta", 1.0))
    if name == "annulus":
        return annulus_kernel(kp.get("value", 0.5), kp.get("r_in", 1.0), kp.get("r_out", 2.0))
    if name == "counterexample":
        return counterexample_kernel(params, kp["gamma"], kp["beta"], kp.get("n_balls", 5))
    if name == "theorem3":
        return theorem3_kernel(params, kp["gamma"], kp["beta"], kp.get("n_balls", 5))
    raise InvalidArgument(f"unknown kernel {name!r}")
