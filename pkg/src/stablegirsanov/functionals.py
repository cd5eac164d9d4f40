"""Additive and multiplicative functionals of a jump path.

For a kernel F and a path X the series below are accumulated at every jump
time and at the horizon:

    A_t        sum of F(X_{s-}, X_s)
    A~_t       sum of 1 - exp(-F)
    [M]_t      sum of F^2
    <M>_t      int_0^t h(X_s) ds, the compensator of A
    M_t        A_t - <M>_t
    log L_t    M_t + sum (log(1+F) - F)

L is the stochastic exponential of M, i.e. the density of the transformed
law on [0, t].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import InvalidArgument, InvariantViolation
from .kernels import KernelSpec, kernel_field, tabulate_field
from .quadrature import QuadratureSpec
from .stable_process import JumpPath, SmallJumpPolicy, StableParams

__all__ = [
    "FunctionalSeries", "accumulate", "kernel_values", "compensator_field",
    "doleans_exponential_pair_check", "sequence_equivalence_check", "SequenceCheck",
    "inverse_density_check", "PathCheck",
]


def _ro(a):
    a = np.asarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FunctionalSeries:
    """Running values at the event times followed by the horizon."""

    times: np.ndarray
    F: np.ndarray  # F(X_{s-}, X_s) per event
    A: np.ndarray
    A_tilde: np.ndarray
    QV: np.ndarray
    compensator: np.ndarray
    M: np.ndarray
    logL: np.ndarray

    @property
    def terminal(self) -> dict:
        return {k: float(getattr(self, k)[-1]) for k in ("A", "A_tilde", "QV", "compensator", "M", "logL")}

    @property
    def L(self) -> np.ndarray:
        return np.exp(self.logL)

    def at(self, t: float) -> dict:
        """Values at time t (right-continuous)."""
        k = int(np.searchsorted(self.times, t, side="right")) - 1
        if k < 0:
            return {"A": 0.0, "A_tilde": 0.0, "QV": 0.0, "M": 0.0, "logL": 0.0, "compensator": 0.0}
        return {n: float(getattr(self, n)[k]) for n in ("A", "A_tilde", "QV", "compensator", "M", "logL")}

    def check_invariants(self, F_upper: float | None = None) -> list[str]:
        bad = []
        if np.all(self.F >= 0):
            for n in ("A", "A_tilde", "QV"):
                if np.any(np.diff(getattr(self, n)) < -1e-12):
                    bad.append(f"{n} not non-decreasing")
            if F_upper and F_upper > 0:
                kappa = -math.expm1(-F_upper) / F_upper
                if np.any(self.A_tilde > self.A * (1 + 1e-12) + 1e-300) or np.any(
                        self.A_tilde < kappa * self.A * (1 - 1e-12)):
                    bad.append("A_tilde outside [kappa A, A]")
        L = self.L
        if not np.all((L > 0) & np.isfinite(L)):
            bad.append("L outside (0, inf)")
        return bad

    def to_record(self) -> dict:
        return {n: getattr(self, n).tolist() for n in
                ("times", "F", "A", "A_tilde", "QV", "compensator", "M", "logL")}


def kernel_values(path: JumpPath, F: KernelSpec) -> np.ndarray:
    """F(X_{s-}, X_s) at every resolved jump; raises if 1 + F <= 0."""
    if path.n_events == 0:
        return np.zeros(0)
    f = np.asarray(F.eval(path.pre, path.post), dtype=float)
    if np.any(1.0 + f <= 0) or not np.all(np.isfinite(f)):
        raise InvariantViolation(f"kernel {F.name} has 1 + F <= 0 along the path")
    return f


def _compensator(path: JumpPath, h_eval: Callable, mesh: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """int_0^t h(X_s) ds at the event times and at the horizon."""
    knots = np.concatenate([path.times, [path.horizon]])
    if path.small_jump_policy is SmallJumpPolicy.DROP:
        # constant on [t_{k-1}, t_k): X = pre[k]; after the last jump X = end
        states = np.vstack([path.pre, path.end[None, :]])
        uniq, inv = np.unique(states, axis=0, return_inverse=True)
        hv = np.asarray(h_eval(uniq), dtype=float)[np.ravel(inv)]
        gaps = np.diff(np.concatenate([[0.0], knots]))
        return knots, np.cumsum(hv * gaps)
    tt, xx = path.skeleton(mesh)
    hv = np.asarray(h_eval(xx), dtype=float)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (hv[1:] + hv[:-1]) * np.diff(tt))])
    idx = np.searchsorted(tt, knots, side="right") - 1
    return knots, cum[idx]


def accumulate(path: JumpPath, F: KernelSpec, h_eval: Callable, mesh: float | None = None) -> FunctionalSeries:
    """Accumulate the functionals of F along ``path``.

    ``h_eval`` maps an (n, d) array of states to the compensator density
    h(x); it should be computed with the same jump cutoff as the path.
    """
    if not F.lower_bound > -1:
        raise InvalidArgument("accumulate needs inf F > -1")
    f = kernel_values(path, F)
    times, comp = _compensator(path, h_eval, mesh)
    n = f.size

    def run(v):
        c = np.cumsum(v)
        return np.concatenate([c, c[-1:] if n else [0.0]])

    A = run(f)
    At = run(-np.expm1(-f))
    QV = run(f * f)
    M = A - comp
    logL = M + run(np.log1p(f) - f)
    return FunctionalSeries(_ro(times), _ro(f), _ro(A), _ro(At), _ro(QV), _ro(comp), _ro(M), _ro(logL))


def compensator_field(params: StableParams, F: KernelSpec, cutoff: float,
                      quad: QuadratureSpec | None = None, r_min: float = 1e-3,
                      r_max: float = 1e5, n: int = 161) -> Callable:
    """h restricted to jumps longer than ``cutoff``, as a callable on states.

    Radial kernels are tabulated once on a log grid; other kernels are
    evaluated directly with a per-state memo.
    """
    if F.is_zero:
        return lambda x: np.zeros(np.atleast_2d(x).shape[0])
    if F.radial:
        return tabulate_field(params, F, quad, cutoff, r_min, r_max, n)
    memo: dict = {}

    def h(x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.empty(x.shape[0])
        for i, row in enumerate(x):
            key = row.tobytes()
            if key not in memo:
                memo[key] = float(kernel_field(params, F, row[None, :], quad, cutoff)[0])
            out[i] = memo[key]
        return out

    return h


# ---------------------------------------------------------------------------
# pathwise identities


class PathCheck(NamedTuple):
    lhs: float
    rhs: float
    rel_err: float


def doleans_exponential_pair_check(path: JumpPath, F: KernelSpec, h_eval: Callable) -> PathCheck:
    """E(M) E(-M) against E(-[M]) from their closed jump-product forms.

    Returns logarithms of both sides and the relative error of the products.
    """
    if F.sup_abs() >= 1:
        raise InvalidArgument("the pair identity needs |F| < 1")
    s = accumulate(path, F, h_eval)
    f = s.F
    if np.any(np.abs(f) >= 1):
        raise InvalidArgument("the pair identity needs |F| < 1 along the path")
    M = s.M[-1]
    log_pos = float(s.logL[-1])  # M + sum(log(1+F) - F)
    log_neg = float(-M + np.sum(np.log1p(-f) + f))
    # [M] has no continuous part, so E(-[M]) = prod (1 - F^2)
    log_qv = float(-s.QV[-1] + np.sum(np.log1p(-f * f) + f * f))
    lhs = log_pos + log_neg
    return PathCheck(lhs, log_qv, abs(math.expm1(lhs - log_qv)))


def inverse_density_check(path: JumpPath, F: KernelSpec, h_eval: Callable) -> PathCheck:
    """log L^F + log L~^{F_1} with F_1 = -F/(1+F); the sum vanishes pathwise.

    Under the transformed law the jump kernel is (1+F) j, against which F_1
    has density F_1 (1+F) = -F, so the compensator of F_1 is minus that of F.
    """
    s = accumulate(path, F, h_eval)
    f = s.F
    f1 = -f / (1.0 + f)
    comp_tilde = -s.compensator[-1]
    M_tilde = float(np.sum(f1)) - comp_tilde
    log_tilde = M_tilde + float(np.sum(np.log1p(f1) - f1))
    log_L = float(s.logL[-1])
    scale = max(1.0, abs(log_L), abs(log_tilde))
    return PathCheck(log_L, -log_tilde, abs(log_L + log_tilde) / scale)


class SequenceCheck(NamedTuple):
    sumsq: object
    sumsq_ratio: object
    product: object


def sequence_equivalence_check(a, cumulative: bool = False) -> SequenceCheck:
    """(sum a^2, sum (a/(1+a))^2, prod (1+a)/(1+a/2)^2) for a sequence a_n > -1."""
    a = np.asarray(a, dtype=float).ravel()
    if np.any(a <= -1):
        raise InvalidArgument("sequence terms must exceed -1")
    sq = a * a
    r = (a / (1.0 + a)) ** 2
    lp = np.log1p(a) - 2.0 * np.log1p(0.5 * a)
    if cumulative:
        return SequenceCheck(np.cumsum(sq), np.cumsum(r), np.exp(np.cumsum(lp)))
    return SequenceCheck(float(sq.sum()), float(r.sum()), float(math.exp(lp.sum())))
