"""Composite Gauss rules used by the kernel fields and the Green potentials.

Integrals over R^d are written in polar coordinates around a centre and the
radial variable is mapped to t = log r.  Power-law singularities at the centre
and power-law tails at infinity then become exponentials in t, which
composite Gauss-Legendre panels integrate to high accuracy.  Accuracy is
controlled by uniform refinement: a result is accepted once two successive
levels agree to the requested tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from .errors import NumericFailure
from .stable_process import sphere_area


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and meshes for the deterministic quadratures.

    ``singularity_exponents`` maps a label (e.g. ``"diagonal"``) to the power
    of the distance with which an integrand vanishes or blows up at a known
    singular point; the declared exponents must exceed -d.
    """

    tol: float = 1e-6
    max_refine: int = 4
    singularity_exponents: dict = field(default_factory=dict)
    gl_order: int = 12
    panel_width: float = 0.5
    n_angular: int = 16
    n_azimuth: int = 16
    r_min: float = 1e-6
    r_max: float = 1e8

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_refine < 1:
            raise ValueError("max_refine must be at least 1")

    def check_exponents(self, d: int):
        for k, v in self.singularity_exponents.items():
            if not v > -d:
                raise ValueError(f"singularity exponent {k}={v} is not integrable in dimension {d}")

    def refined(self, level: int) -> "QuadratureSpec":
        f = 2 ** level
        return QuadratureSpec(self.tol, self.max_refine, dict(self.singularity_exponents), self.gl_order,
                              self.panel_width / f, self.n_angular * f, self.n_azimuth * f,
                              self.r_min, self.r_max)

    def to_dict(self) -> dict:
        return {"tol": self.tol, "max_refine": self.max_refine,
                "singularity_exponents": dict(self.singularity_exponents),
                "gl_order": self.gl_order, "panel_width": self.panel_width,
                "n_angular": self.n_angular, "n_azimuth": self.n_azimuth,
                "r_min": self.r_min, "r_max": self.r_max}


@lru_cache(maxsize=64)
def _legendre(n: int):
    x, w = roots_legendre(n)
    return x, w


def panel_rule(edges, order: int, width: float):
    """Nodes and weights of composite Gauss-Legendre on the breakpoints ``edges``.

    Each interval between consecutive edges is split into panels no wider
    than ``width``.
    """
    x, w = _legendre(order)
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a:
            continue
        m = max(int(math.ceil((b - a) / width)), 1)
        e = np.linspace(a, b, m + 1)
        half = 0.5 * np.diff(e)
        mid = 0.5 * (e[:-1] + e[1:])
        nodes.append((mid[:, None] + half[:, None] * x[None, :]).ravel())
        weights.append((half[:, None] * w[None, :]).ravel())
    if not nodes:
        return np.zeros(0), np.zeros(0)
    return np.concatenate(nodes), np.concatenate(weights)


def sphere_rule(d: int, n_polar: int, n_azimuth: int, axis=None, axisymmetric=False):
    """Directions and weights on the unit sphere of R^d summing to its area.

    With ``axisymmetric`` the integrand may depend on the direction only via
    its angle with ``axis``; a one-dimensional Gauss-Jacobi rule in the cosine
    of that angle is then used.
    """
    if d == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if axis is None:
        axis = np.zeros(d)
        axis[0] = 1.0
    axis = np.asarray(axis, dtype=float)
    nrm = np.linalg.norm(axis)
    if nrm == 0:
        axis = np.zeros(d)
        axis[0] = 1.0
    else:
        axis = axis / nrm
    # orthonormal frame with axis first
    basis = np.linalg.qr(np.column_stack([axis, np.eye(d)]))[0][:, :d]
    if basis[:, 0] @ axis < 0:
        basis = -basis
    a = (d - 3) / 2.0
    mu, wmu = roots_jacobi(n_polar, a, a)
    if axisymmetric:
        perp = basis[:, 1]
        dirs = mu[:, None] * axis[None, :] + np.sqrt(1 - mu ** 2)[:, None] * perp[None, :]
        return dirs, wmu * sphere_area(d - 1)
    if d == 2:
        phi = 2 * math.pi * (np.arange(n_azimuth * 2) + 0.5) / (n_azimuth * 2)
        dirs = np.cos(phi)[:, None] * basis[:, 0] + np.sin(phi)[:, None] * basis[:, 1]
        return dirs, np.full(phi.size, 2 * math.pi / phi.size)
    if d == 3:
        phi = 2 * math.pi * (np.arange(n_azimuth) + 0.5) / n_azimuth
        s = np.sqrt(1 - mu ** 2)
        dirs = (mu[:, None, None] * basis[:, 0][None, None, :]
                + (s[:, None] * np.cos(phi)[None, :])[:, :, None] * basis[:, 1][None, None, :]
                + (s[:, None] * np.sin(phi)[None, :])[:, :, None] * basis[:, 2][None, None, :])
        w = (wmu[:, None] * np.full(n_azimuth, 2 * math.pi / n_azimuth)[None, :])
        return dirs.reshape(-1, 3), w.ravel()
    raise NotImplementedError("non-axisymmetric angular rules are implemented for d <= 3 only")


def log_radial_integral(g, t_lo: float, t_hi: float, breaks, quad: QuadratureSpec,
                        rate_lo: float | None = None, rate_hi: float | None = None):
    """Integrate ``g(t)`` over [t_lo, t_hi] with optional exponential tails.

    ``g(t, q)`` maps a 1-d array of t values to an array of shape (n_t, m);
    ``q`` is the quadrature spec of the current refinement level, so angular
    rules inside ``g`` are refined together with the radial panels.  If
    ``rate_lo`` is given the integrand is assumed to behave like
    exp(rate_lo * t) below ``t_lo`` and the tail ``g(t_lo)/rate_lo`` is added;
    likewise ``rate_hi`` for exp(-rate_hi * t) beyond ``t_hi``.
    Returns (value, error) arrays of shape (m,).
    """
    edges = sorted({t_lo, t_hi, *[b for b in breaks if t_lo < b < t_hi]})

    def level(q: QuadratureSpec):
        t, w = panel_rule(edges, q.gl_order, q.panel_width)
        vals = g(t, q)
        out = w @ vals
        if rate_lo is not None:
            out = out + g(np.array([t_lo]), q)[0] / rate_lo
        if rate_hi is not None:
            out = out + g(np.array([t_hi]), q)[0] / rate_hi
        return out

    prev = level(quad)
    for k in range(1, quad.max_refine + 1):
        cur = level(quad.refined(k))
        err = np.abs(cur - prev)
        floor = 1e-14 * float(np.max(np.abs(cur), initial=0.0)) + 1e-300
        if np.all(err <= quad.tol * np.abs(cur) + floor):
            return cur, err
        prev = cur
    raise NumericFailure("radial quadrature did not converge", partial=cur, error=err)
