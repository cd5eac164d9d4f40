"""Potential theory of the isotropic stable process.

Closed forms for the free Green function, the Green function of a ball and
its Poisson kernel, plus quadratures for Green potentials, the 3G integral
and conditioned jump expectations inside a ball.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import betainc
from scipy.special import gamma as _gamma

from .errors import InvalidArgument, NumericFailure
from .quadrature import QuadratureSpec, log_radial_integral, panel_rule, sphere_rule
from .stable_process import StableParams, sphere_area

__all__ = [
    "green", "green_potential", "GreenPotential", "ball_green", "poisson_kernel",
    "poisson_constant", "poisson_constant_report", "poisson_mass", "poisson_harmonic_check",
    "three_g_integral", "c1_constant", "C1Result", "default_c1_grid", "r0_of",
    "conditioned_expectation", "c1_table", "r0_table", "THREE_G_QUAD",
]

# coarse base mesh for the six-dimensional integrals; one refinement is the
# doubling performed by QuadratureSpec.refined(1)
THREE_G_QUAD = QuadratureSpec(tol=5e-2, max_refine=1, gl_order=6, panel_width=1.5,
                              n_angular=6, n_azimuth=8)


def _norm(x):
    return np.sqrt(np.sum(np.square(x), axis=-1))


# ---------------------------------------------------------------------------
# free and ball Green functions


def green(params: StableParams, x, y):
    """G(x,y) = c |x-y|^(alpha-d); +inf on the diagonal."""
    params.require_transient()
    r = _norm(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
    with np.errstate(divide="ignore"):
        out = params.green_const * r ** (params.alpha - params.d)
    return float(out) if np.ndim(out) == 0 else out


def _unit_ball_green(params: StableParams, x, y):
    d, a = params.d, params.alpha
    diff2 = np.sum(np.square(x - y), axis=-1)
    nx = np.clip(1.0 - np.sum(np.square(x), axis=-1), 0.0, None)
    ny = np.clip(1.0 - np.sum(np.square(y), axis=-1), 0.0, None)
    prod = nx * ny
    with np.errstate(divide="ignore", invalid="ignore"):
        frac = np.where(prod > 0, prod / (diff2 + prod), 0.0)
        b = (d - a) / 2.0
        # the regularized incomplete beta reduces to a power when b == 1
        reg = frac ** (a / 2.0) if b == 1.0 else betainc(a / 2.0, b, frac)
        return params.green_const * diff2 ** ((a - d) / 2.0) * reg


def ball_green(params: StableParams, center, radius: float, x, y):
    """Green function of the process killed on leaving B(center, radius).

    Uses the classical incomplete-beta form on the unit ball,
    G_B(x,y) = G(x,y) I_{w/(1+w)}(alpha/2, (d-alpha)/2) with
    w = (1-|x|^2)(1-|y|^2)/|x-y|^2, transported by the scaling rule.
    """
    params.require_transient()
    if not radius > 0:
        raise InvalidArgument("radius must be positive")
    c = np.asarray(center, dtype=float)
    xs = (np.asarray(x, dtype=float) - c) / radius
    ys = (np.asarray(y, dtype=float) - c) / radius
    if np.any(_norm(xs) >= 1) or np.any(_norm(ys) >= 1):
        raise InvalidArgument("ball Green function needs both points inside the open ball")
    out = radius ** (params.alpha - params.d) * _unit_ball_green(params, xs, ys)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# Green potentials


@dataclass(frozen=True)
class GreenPotential:
    value: float
    divergent: bool
    blocks: list
    tail_ratio: float | None
    tail: float

    def to_dict(self) -> dict:
        return {"value": self.value, "divergent": self.divergent, "tail_ratio": self.tail_ratio,
                "tail": self.tail, "blocks": list(self.blocks)}


def green_potential(params: StableParams, h, x, quad: QuadratureSpec | None = None,
                    breaks=(), radial: bool | None = None, full_output: bool = False):
    """Gh(x) = int G(x,y) h(y) dy for a bounded non-negative field ``h``.

    The integral is accumulated over decades of |y - x|.  The tail beyond the
    last decade is continued geometrically from the last two decades; if the
    decade contributions stop decreasing the potential is reported as +inf.
    ``radial`` declares h to depend on |y| only (detected for RadialField).
    """
    params.require_transient()
    quad = quad or QuadratureSpec()
    d, a = params.d, params.alpha
    x = np.asarray(x, dtype=float).reshape(-1)
    if radial is None:
        radial = hasattr(h, "radial") and callable(getattr(h, "radial"))
    brk = [math.log(b) for b in breaks if b > 0]
    nx = float(_norm(x))
    if radial and nx > 0:
        brk.append(math.log(nx))

    def g(t, q):
        if d == 1:
            dirs, w = sphere_rule(1, 0, 0)
        elif radial:
            dirs, w = sphere_rule(d, q.n_angular, 0, axis=x if nx > 0 else None, axisymmetric=True)
        else:
            dirs, w = sphere_rule(d, q.n_angular, q.n_azimuth)
        r = np.exp(t)
        y = x[None, None, :] + r[:, None, None] * dirs[None, :, :]
        vals = np.asarray(h(y.reshape(-1, d)), dtype=float).reshape(r.size, -1)
        if np.any(vals < 0):
            raise InvalidArgument("green_potential needs a non-negative field")
        return ((vals @ w) * r ** a)[:, None]

    step = math.log(10.0)
    t0, t1 = math.log(quad.r_min), math.log(quad.r_max)
    n_blocks = int(math.ceil((t1 - t0) / step))
    blocks = []
    for k in range(n_blocks):
        lo, hi = t0 + k * step, min(t0 + (k + 1) * step, t1)
        val, _ = log_radial_integral(g, lo, hi, brk, quad, rate_lo=a if k == 0 else None)
        blocks.append(float(val[0]) * params.green_const)
    total = float(sum(blocks))
    last, prev = blocks[-1], blocks[-2]
    ratio = None
    tail = 0.0
    divergent = False
    if last > 0:
        ratio = last / prev if prev > 0 else math.inf
        if ratio >= 0.95 and blocks[-3] > 0 and blocks[-2] / blocks[-3] >= 0.95:
            divergent = True
        else:
            ratio = min(ratio, 0.95)
            tail = last * ratio / (1.0 - ratio)
    value = math.inf if divergent else total + tail
    res = GreenPotential(value, divergent, blocks, ratio, tail)
    return res if full_output else value


# ---------------------------------------------------------------------------
# Poisson kernel


def _poisson_mass_unnormalized(params: StableParams, quad: QuadratureSpec) -> float:
    # int_{|z|>1} (|z|^2-1)^(-alpha/2) |z|^-d dz = sigma/2 * int_0^inf s^(-alpha/2)/(1+s) ds
    a = params.alpha

    def g(t, q):
        s = np.exp(t)
        return (s ** (1.0 - a / 2.0) / (1.0 + s))[:, None]

    val, _ = log_radial_integral(g, -40.0, 40.0, [0.0], quad, rate_lo=1.0 - a / 2.0, rate_hi=a / 2.0)
    return 0.5 * sphere_area(params.d) * float(val[0])


@lru_cache(maxsize=32)
def _poisson_constant_cached(d: int, alpha: float) -> float:
    q = QuadratureSpec(tol=1e-12, max_refine=6)
    return 1.0 / _poisson_mass_unnormalized(StableParams(d, alpha), q)


def poisson_constant(params: StableParams) -> float:
    """Normalizing constant of the ball Poisson kernel, fixed numerically."""
    return _poisson_constant_cached(params.d, params.alpha)


def poisson_constant_report(params: StableParams) -> dict:
    """Numerical constant against the standard closed form and the printed one."""
    d, a = params.d, params.alpha
    numeric = poisson_constant(params)
    standard = float(_gamma(d / 2.0) * math.pi ** (-d / 2.0 - 1.0) * math.sin(math.pi * a / 2.0))
    printed = float(math.pi ** (1.0 + d / 2.0) * _gamma(d / 2.0) * math.sin(math.pi * a / 2.0))
    return {
        "d": d, "alpha": a,
        "numeric": numeric,
        "standard_closed_form": standard,
        "printed": printed,
        "printed_over_numeric": printed / numeric,
        "log_pi_of_ratio": math.log(printed / numeric) / math.log(math.pi),
        "standard_rel_err": abs(standard - numeric) / numeric,
    }


def poisson_kernel(params: StableParams, r: float, x, z):
    """Density of X at the first exit from B(0, r) started at x, evaluated at z."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    nx2 = np.sum(np.square(x), axis=-1)
    nz2 = np.sum(np.square(z), axis=-1)
    if not r > 0 or np.any(nx2 >= r * r) or np.any(nz2 <= r * r):
        raise InvalidArgument("poisson kernel needs |x| < r < |z|")
    a, d = params.alpha, params.d
    out = poisson_constant(params) * ((r * r - nx2) / (nz2 - r * r)) ** (a / 2.0) * _norm(x - z) ** (-d)
    return float(out) if np.ndim(out) == 0 else out


def poisson_mass(params: StableParams, r: float, x, quad: QuadratureSpec | None = None) -> float:
    """Quadrature of P_r(x, z) over |z| > r."""
    quad = quad or QuadratureSpec(tol=1e-8, max_refine=5)
    d, a = params.d, params.alpha
    x = np.asarray(x, dtype=float).reshape(-1)
    nx = float(_norm(x))

    def g(t, q):
        if d == 1:
            dirs, w = sphere_rule(1, 0, 0)
        else:
            dirs, w = sphere_rule(d, q.n_angular, 0, axis=x if nx > 0 else None, axisymmetric=True)
        rho = r + np.exp(t)
        z = rho[:, None, None] * dirs[None, :, :]
        vals = poisson_kernel(params, r, np.broadcast_to(x, z.shape), z)
        return ((vals @ w) * rho ** (d - 1) * np.exp(t))[:, None]

    val, _ = log_radial_integral(g, math.log(r) - 30.0, math.log(r) + 30.0, [math.log(r)], quad,
                                 rate_lo=1.0 - a / 2.0, rate_hi=a)
    return float(val[0])


def _tanh_sinh(f, lo: float, hi: float, level: int):
    h = 2.0 ** -level
    k = np.arange(-int(4.0 / h), int(4.0 / h) + 1) * h
    u = 0.5 * math.pi * np.sinh(k)
    x = np.tanh(u)
    w = 0.5 * math.pi * np.cosh(k) / np.cosh(u) ** 2 * h
    half = 0.5 * (hi - lo)
    keep = np.abs(x) < 1.0
    pts = lo + half * (1.0 + x[keep])
    # distance to the nearer endpoint without cancellation
    gap_lo = half / (np.exp(-2 * u[keep]) + 1.0) * 2.0
    gap_hi = half / (np.exp(2 * u[keep]) + 1.0) * 2.0
    return float(np.sum(w[keep] * half * f(pts, gap_lo, gap_hi)))


def poisson_harmonic_check(params: StableParams, r: float, w, level: int = 6) -> tuple[float, float]:
    """(int P_r(0,z) G(z,w) dz, G(0,w)) for |w| > r, in d = 1 or 3.

    The angular integral of G(., w) over spheres is done in closed form and
    the remaining radial integral by double-exponential quadrature.
    """
    params.require_transient()
    d, a = params.d, params.alpha
    w = np.asarray(w, dtype=float).reshape(-1)
    W = float(_norm(w))
    if not W > r:
        raise InvalidArgument("harmonicity check needs |w| > r")
    if d not in (1, 3):
        raise InvalidArgument("closed-form sphere averages are available for d = 1 and d = 3")
    c_hat, cg = poisson_constant(params), params.green_const

    def shell(rho, gap_w):
        # integral of G(z, w) over the sphere |z| = rho, area element included
        if d == 1:
            return cg * (gap_w ** (a - 1.0) + (rho + W) ** (a - 1.0))
        if a == 1.0:
            s = np.log((rho + W) / gap_w) / (rho * W)
        else:
            s = ((rho + W) ** (a - 1.0) - gap_w ** (a - 1.0)) / (rho * W * (a - 1.0))
        return cg * 2.0 * math.pi * rho * rho * s

    def radial(rho, gap_r, gap_w):
        pk = c_hat * (r * r / (gap_r * (rho + r))) ** (a / 2.0) * rho ** (-d)
        return pk * shell(rho, gap_w)

    def seg1(pts, glo, ghi):
        return radial(pts, glo, ghi)

    inner = _tanh_sinh(seg1, r, W, level)

    def seg2(t):
        rho = W + np.exp(t)
        return radial(rho, rho - r, np.exp(t)) * np.exp(t)

    tt, wt = panel_rule([math.log(W) - 40.0, math.log(W) + 40.0], 12, 0.25 * 2.0 ** (6 - level))
    outer = float(wt @ seg2(tt))
    return inner + outer, float(green(params, np.zeros(d), w))


# ---------------------------------------------------------------------------
# 3G integral and conditioned expectations


_LO_FRAC = 0.02


def _polar_nodes(d, centers, dirs, wdirs, rho_lo, rate_lo, quad: QuadratureSpec):
    """Polar quadrature of the unit ball around each centre.

    Radii below half the distance to the sphere use t = log rho down to
    ``rho_lo`` plus a power-law tail node of rate ``rate_lo``; the outer half
    uses rho = rho_max (1 - v^2/2), which absorbs the square-root type
    vanishing of ball Green functions at the boundary.
    Returns points (m, N, d) and weights (m, N).
    """
    ct = centers @ dirs.T
    c2 = np.sum(np.square(centers), axis=-1)
    rho_max = -ct + np.sqrt(np.clip(ct * ct + 1.0 - c2[:, None], 0.0, None))
    t_lo = np.log(rho_lo)[:, None]
    span = np.log(rho_max / 2.0) - t_lo
    if np.any(span <= 0):
        raise NumericFailure("polar block: inner cutoff exceeds the distance to the boundary")
    n_pan = max(1, int(math.ceil(float(span.max()) / quad.panel_width)))
    s, ws = panel_rule(np.array([0.0, 1.0]), quad.gl_order, 1.0 / n_pan)
    t = t_lo[..., None] + span[..., None] * s
    rho_n = np.exp(t)
    w_n = wdirs[None, :, None] * ws * span[..., None] * rho_n ** d
    v, wv = panel_rule(np.array([0.0, 1.0]), quad.gl_order, min(1.0, quad.panel_width))
    rho_f = rho_max[..., None] * (1.0 - 0.5 * v * v)
    w_f = wdirs[None, :, None] * wv * rho_max[..., None] * v * rho_f ** (d - 1)
    m, k = rho_max.shape
    rho_t = np.broadcast_to(rho_lo[:, None, None], (m, k, 1))
    w_t = np.broadcast_to((wdirs[None, :] * (rho_lo ** d / rate_lo)[:, None])[..., None], (m, k, 1))
    rho = np.concatenate([rho_n, rho_f, rho_t], axis=-1)
    wt = np.concatenate([w_n, w_f, w_t], axis=-1)
    pts = centers[:, None, None, :] + rho[..., None] * dirs[None, :, None, :]
    return pts.reshape(m, -1, d), wt.reshape(m, -1)


def _partition(p, a, b):
    # weight of the piece centred at a; smooth, equal to 1 near a and 0 near b
    da = np.sum(np.square(p - a), axis=-1)
    db = np.sum(np.square(p - b), axis=-1)
    return db * db / (da * da + db * db)


def _inner_integral(params, ys, w, middle, p, quad, z_dirs, z_wdirs, chunk=3_000_000):
    """J(y) = int_B G_B(z, w) middle(y, z) dz for every row of ``ys``."""
    d, a = params.d, params.alpha
    dw = np.maximum(_norm(ys - w), 1e-300)
    delta_w = 1.0 - float(_norm(w))
    lo_w = _LO_FRAC * min(delta_w, float(dw.min()))
    zw, ww = _polar_nodes(d, w[None, :], z_dirs, z_wdirs, np.array([lo_w]), a, quad)
    zw, ww = zw[0], ww[0]
    gw = _unit_ball_green(params, zw, w[None, :]) * ww
    out = np.zeros(ys.shape[0])
    step = max(1, chunk // max(zw.shape[0], 1))
    for i in range(0, ys.shape[0], step):
        y = ys[i:i + step]
        dyz2 = np.sum(np.square(y[:, None, :] - zw[None, :, :]), axis=-1)
        dzw2 = np.sum(np.square(zw - w), axis=-1)[None, :]
        chi_w = dyz2 * dyz2 / (dyz2 * dyz2 + dzw2 * dzw2)
        # a w-centred node that lands exactly on y carries chi_w = 0
        with np.errstate(divide="ignore", invalid="ignore"):
            m = np.where(dyz2 > 0, chi_w * middle(y[:, None, :], zw[None, :, :], np.sqrt(dyz2)), 0.0)
        out[i:i + step] += np.sum(m * gw, axis=-1)
    # pieces centred at each y
    delta_y = 1.0 - _norm(ys)
    lo_y = _LO_FRAC * np.minimum(delta_y, dw)
    n_z = z_dirs.shape[0] * 64
    step = max(1, chunk // n_z)
    for i in range(0, ys.shape[0], step):
        y = ys[i:i + step]
        zy, wy = _polar_nodes(d, y, z_dirs, z_wdirs, lo_y[i:i + step], p - a, quad)
        chi_y = _partition(zy, y[:, None, :], w)
        dyz = _norm(zy - y[:, None, :])
        vals = chi_y * _unit_ball_green(params, zy, w) * middle(y[:, None, :], zy, dyz)
        out[i:i + step] += np.sum(vals * wy, axis=-1)
    return out


def _double_integral(params, x, w, middle, p, quad, axisymmetric):
    """int_B int_B G_B(x,y) G_B(z,w) middle(y,z) dz dy / G_B(x,w) on the unit ball."""
    d, a = params.d, params.alpha
    x = np.asarray(x, dtype=float).reshape(-1)
    w = np.asarray(w, dtype=float).reshape(-1)
    D = float(_norm(x - w))
    if D == 0:
        raise InvalidArgument("x and w must differ")
    if float(_norm(x)) >= 1 or float(_norm(w)) >= 1:
        raise InvalidArgument("x and w must lie in the open ball")
    if d == 1:
        o_dirs, o_w = sphere_rule(1, 0, 0)
        z_dirs, z_w = o_dirs, o_w
    else:
        if axisymmetric:
            axis = w - x
            o_dirs, o_w = sphere_rule(d, quad.n_angular, 0, axis=axis, axisymmetric=True)
        else:
            o_dirs, o_w = sphere_rule(d, quad.n_angular, quad.n_azimuth)
        z_dirs, z_w = sphere_rule(d, quad.n_angular, quad.n_azimuth)
    rate_w = min(p, float(d)) if p != d else 0.999 * d
    lo_x = _LO_FRAC * min(D, 1.0 - float(_norm(x)))
    lo_w = _LO_FRAC * min(D, 1.0 - float(_norm(w)))
    yx, wx = _polar_nodes(d, x[None, :], o_dirs, o_w, np.array([lo_x]), a, quad)
    yw, ww = _polar_nodes(d, w[None, :], o_dirs, o_w, np.array([lo_w]), rate_w, quad)
    ys = np.concatenate([yx[0], yw[0]])
    chi = _partition(ys, x, w)
    part = np.concatenate([chi[: yx.shape[1]], 1.0 - chi[yx.shape[1]:]])
    wts = np.concatenate([wx[0], ww[0]]) * part
    J = _inner_integral(params, ys, w, middle, p, quad, z_dirs, z_w)
    gx = _unit_ball_green(params, x[None, :], ys)
    return float(np.sum(gx * J * wts) / _unit_ball_green(params, x, w))


def _collinear_with_origin(x, w) -> bool:
    m = np.vstack([x, w])
    return np.linalg.matrix_rank(m, tol=1e-12) <= 1


def three_g_integral(params: StableParams, x, w, beta: float, quad: QuadratureSpec | None = None) -> float:
    """int_B int_B G_B(x,y) G_B(z,w) / G_B(x,w) |y-z|^(beta-alpha-d) dz dy on the unit ball."""
    params.require_transient()
    if not beta > params.alpha:
        raise InvalidArgument("the 3G integral needs beta > alpha")
    quad = quad or THREE_G_QUAD
    quad.check_exponents(params.d)
    e = beta - params.alpha - params.d

    def middle(y, z, dyz):
        return dyz ** e

    x = np.asarray(x, dtype=float).reshape(-1)
    w = np.asarray(w, dtype=float).reshape(-1)
    return _double_integral(params, x, w, middle, beta, quad, _collinear_with_origin(x, w))


def default_c1_grid(d: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """5 x 5 pairs from five points on one axis; diagonal pairs are offset by 0.01 inward."""
    base = [0.0, 0.7, 0.99, -0.8, -0.5]
    pairs = []
    for i, a in enumerate(base):
        for j, b in enumerate(base):
            if i == j:
                b = a - 0.01 * math.copysign(1.0, a) if a != 0 else 0.01
            x = np.zeros(d)
            y = np.zeros(d)
            x[0], y[0] = a, b
            pairs.append((x, y))
    return pairs


@dataclass(frozen=True)
class C1Result:
    value: float
    values: list
    argmax: int
    grid: list = field(repr=False)
    quad: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"value": self.value, "argmax": self.argmax, "quad": self.quad,
                "grid": [{"x": x.tolist(), "w": w.tolist(), "value": v}
                         for (x, w), v in zip(self.grid, self.values)]}


def c1_constant(params: StableParams, beta: float, quad: QuadratureSpec | None = None,
                grid=None) -> C1Result:
    """Grid maximum of the 3G integral; a lower bound for the supremum."""
    quad = quad or THREE_G_QUAD
    grid = default_c1_grid(params.d) if grid is None else grid
    cache: dict = {}
    values = []
    for x, w in grid:
        key = (tuple(np.round(x, 12)), tuple(np.round(w, 12)))
        rkey = (key[1], key[0])
        if rkey in cache:  # the integral is symmetric under x <-> w
            values.append(cache[rkey])
            continue
        v = three_g_integral(params, x, w, beta, quad)
        if not math.isfinite(v):
            raise NumericFailure(f"3G integral is not finite at x={x.tolist()}, w={w.tolist()}", partial=v)
        cache[key] = v
        values.append(v)
    k = int(np.argmax(values))
    return C1Result(float(values[k]), [float(v) for v in values], k, list(grid), quad.to_dict())


def r0_of(C: float, params: StableParams, beta: float, eps: float, c1: float | None = None,
          quad: QuadratureSpec | None = None) -> float:
    """Radius with C C1 r0^beta = eps."""
    if not (C > 0 and eps > 0):
        raise InvalidArgument("C and eps must be positive")
    if not beta > params.alpha:
        raise InvalidArgument("r0 needs beta > alpha")
    if c1 is None:
        c1 = c1_constant(params, beta, quad).value
    return (eps / (C * c1)) ** (1.0 / beta)


def conditioned_expectation(params: StableParams, center, radius: float, x, w, F,
                            quad: QuadratureSpec | None = None) -> float:
    """E_x^w of the jump sum of F before leaving B(center, radius).

    The process is conditioned to die at w; the value is
    int int G_B(x,y) G_B(z,w) / G_B(x,w) F(y,z) j(y,z) dz dy.
    """
    params.require_transient()
    quad = quad or THREE_G_QUAD
    if F.is_zero:
        return 0.0
    if F.lower_bound < 0:
        raise InvalidArgument("conditioned expectation needs F >= 0")
    p = F.near_diag_exponent
    if p is None or not p > params.alpha:
        raise InvalidArgument("conditioned expectation needs a near-diagonal exponent above alpha")
    c = np.asarray(center, dtype=float).reshape(-1)
    xs = (np.asarray(x, dtype=float).reshape(-1) - c) / radius
    ws = (np.asarray(w, dtype=float).reshape(-1) - c) / radius
    e = -params.alpha - params.d

    # in unit-ball coordinates the powers of the radius cancel
    def middle(y, z, dyz):
        yy, zz = np.broadcast_arrays(c + radius * y, c + radius * z)
        return F.eval(yy, zz) * dyz ** e

    # F radial about the origin keeps axial symmetry when the origin lies on the axis
    axis_ok = _collinear_with_origin(xs, ws) and (
        not np.any(c) or (F.radial and _collinear_with_origin(c, ws - xs)))
    val = _double_integral(params, xs, ws, middle, p, quad, axis_ok)
    return params.levy_const * val


# ---------------------------------------------------------------------------
# tables


def c1_table(triples, quad: QuadratureSpec | None = None) -> list[dict]:
    rows = []
    for d, alpha, beta in triples:
        p = StableParams(int(d), float(alpha))
        res = c1_constant(p, float(beta), quad)
        rows.append({"d": p.d, "alpha": p.alpha, "beta": float(beta), "C1": res.value,
                     "argmax_x": res.grid[res.argmax][0][0], "argmax_w": res.grid[res.argmax][1][0]})
    return rows


def r0_table(rows_c1, C: float, eps_values) -> list[dict]:
    out = []
    for row in rows_c1:
        p = StableParams(row["d"], row["alpha"])
        for eps in eps_values:
            out.append({"d": row["d"], "alpha": row["alpha"], "beta": row["beta"], "C": C,
                        "eps": float(eps), "C1": row["C1"],
                        "r0": r0_of(C, p, row["beta"], float(eps), c1=row["C1"])})
    return out
