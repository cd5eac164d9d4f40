"""Isotropic alpha-stable Levy processes: exact increments and jump-resolved paths.

Two samplers are provided.  ``sample_increment`` draws X_t - X_0 exactly by
subordinating a Gaussian vector to a one-sided (alpha/2)-stable variable.
``sample_jump_path`` resolves every jump larger than a cutoff ``eps`` as a
compound Poisson process; smaller jumps are either dropped or replaced by a
Brownian motion with matching covariance.

Random streams are derived per path from ``(master_seed, index)`` so that any
subset of paths can be regenerated independently of scheduling order.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from scipy.special import betainc
from scipy.special import gamma as _gamma

from .errors import InvalidArgument

__all__ = [
    "StableParams",
    "SmallJumpPolicy",
    "JumpEvent",
    "JumpPath",
    "McEstimate",
    "combined_std_err",
    "Ball",
    "Annulus",
    "WholeSpace",
    "ExitData",
    "levy_constant",
    "green_constant",
    "sphere_area",
    "big_jump_rate",
    "small_jump_variance_rate",
    "path_seed",
    "path_stream",
    "sample_positive_stable",
    "sample_increment",
    "sample_increments",
    "sample_jump_path",
    "iter_jump_paths",
    "exit_data",
    "hitting_prob_estimate",
    "ball_hitting_probability",
]


# ---------------------------------------------------------------------------
# constants


def levy_constant(d: int, alpha: float) -> float:
    """Prefactor of the Levy density ``c |y|^(-d-alpha)``."""
    return float(
        alpha
        * 2.0 ** (alpha - 1.0)
        * _gamma((alpha + d) / 2.0)
        / (math.pi ** (d / 2.0) * _gamma(1.0 - alpha / 2.0))
    )


def green_constant(d: int, alpha: float) -> float:
    """Prefactor of the Green function ``c |x-y|^(alpha-d)``; needs alpha < d."""
    if not alpha < d:
        raise InvalidArgument(f"Green function needs alpha < d (got alpha={alpha}, d={d})")
    return float(2.0 ** (-alpha) * math.pi ** (-d / 2.0) * _gamma((d - alpha) / 2.0) / _gamma(alpha / 2.0))


def sphere_area(d: int) -> float:
    """Surface area of the unit sphere in R^d (2 for d = 1)."""
    return float(2.0 * math.pi ** (d / 2.0) / _gamma(d / 2.0))


@dataclass(frozen=True)
class StableParams:
    """Dimension and index of an isotropic alpha-stable process.

    ``levy_const`` and ``green_const`` are derived on construction; the latter
    is ``None`` in the recurrent regime alpha >= d.
    """

    d: int
    alpha: float
    levy_const: float = field(init=False)
    green_const: float | None = field(init=False)

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise InvalidArgument(f"dimension must be a positive integer, got {self.d!r}")
        if not (0.0 < self.alpha < 2.0):
            raise InvalidArgument(f"alpha must lie in (0, 2), got {self.alpha!r}")
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "levy_const", levy_constant(self.d, self.alpha))
        gc = green_constant(self.d, self.alpha) if self.alpha < self.d else None
        object.__setattr__(self, "green_const", gc)

    @property
    def transient(self) -> bool:
        return self.alpha < self.d

    def require_transient(self):
        if not self.transient:
            raise InvalidArgument(
                f"operation needs a transient process (alpha < d); got d={self.d}, alpha={self.alpha}"
            )

    def to_dict(self) -> dict:
        return {"d": self.d, "alpha": self.alpha}


class SmallJumpPolicy(str, enum.Enum):
    DROP = "Drop"
    BROWNIAN_MATCH = "BrownianMatch"

    @classmethod
    def parse(cls, value) -> "SmallJumpPolicy":
        if isinstance(value, cls):
            return value
        for member in cls:
            if str(value).lower() in (member.value.lower(), member.name.lower()):
                return member
        raise InvalidArgument(f"unknown small-jump policy {value!r}")


def big_jump_rate(params: StableParams, cutoff: float) -> float:
    """Total intensity of jumps with magnitude above ``cutoff``."""
    if cutoff <= 0:
        raise InvalidArgument("cutoff must be positive")
    return params.levy_const * sphere_area(params.d) * cutoff ** (-params.alpha) / params.alpha


def small_jump_variance_rate(params: StableParams, cutoff: float) -> float:
    """Per-coordinate variance rate of the jumps below ``cutoff``."""
    d, a = params.d, params.alpha
    return params.levy_const * sphere_area(d) * cutoff ** (2.0 - a) / (d * (2.0 - a))


# ---------------------------------------------------------------------------
# Monte Carlo summaries


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_err: float
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise InvalidArgument("a Monte Carlo estimate needs at least two samples")
        if self.std_err < 0:
            raise InvalidArgument("standard error must be non-negative")

    @property
    def ci95(self) -> float:
        return 1.96 * self.std_err

    @classmethod
    def from_samples(cls, samples, weights=None) -> "McEstimate":
        x = np.asarray(samples, dtype=float).ravel()
        if weights is not None:
            x = x * np.asarray(weights, dtype=float).ravel()
        if x.size < 2:
            raise InvalidArgument("a Monte Carlo estimate needs at least two samples")
        return cls(float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size)), int(x.size))

    def to_dict(self) -> dict:
        return {"mean": self.mean, "std_err": self.std_err, "n": self.n, "ci95": self.ci95}


def combined_std_err(*estimates: McEstimate) -> float:
    return math.sqrt(sum(e.std_err ** 2 for e in estimates))


# ---------------------------------------------------------------------------
# random streams


def path_seed(master_seed: int, index: int, *extra: int) -> int:
    """64-bit seed of path ``index`` under ``master_seed``."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(index),) + tuple(int(e) for e in extra))
    return int(ss.generate_state(1, np.uint64)[0])


def path_stream(master_seed: int, index: int, *extra: int) -> np.random.Generator:
    return np.random.default_rng(path_seed(master_seed, index, *extra))


def _as_rng(stream) -> tuple[np.random.Generator, int | None]:
    if isinstance(stream, np.random.Generator):
        return stream, None
    if stream is None:
        raise InvalidArgument("a random stream or integer seed is required")
    return np.random.default_rng(int(stream)), int(stream)


# ---------------------------------------------------------------------------
# exact increments


def sample_positive_stable(a: float, t: float, size, rng: np.random.Generator) -> np.ndarray:
    """One-sided a-stable variables with Laplace transform exp(-t lambda^a), 0 < a < 1.

    Chambers-Mallows-Stuck in Kanter's form for the totally skewed case.
    """
    u = math.pi * (1.0 - rng.random(size))  # (0, pi]
    e = rng.standard_exponential(size)
    s = (np.sin(a * u) / np.sin(u) ** (1.0 / a)) * (np.sin((1.0 - a) * u) / e) ** ((1.0 - a) / a)
    return t ** (1.0 / a) * s


def sample_increments(params: StableParams, t: float, size: int, stream) -> np.ndarray:
    """``size`` independent exact draws of X_t - X_0, shape (size, d)."""
    if not t > 0:
        raise InvalidArgument("t must be positive")
    rng, _ = _as_rng(stream)
    s = sample_positive_stable(params.alpha / 2.0, t, size, rng)
    z = rng.standard_normal((size, params.d))
    return np.sqrt(2.0 * s)[:, None] * z


def sample_increment(params: StableParams, t: float, stream) -> np.ndarray:
    """One exact draw of X_t - X_0 with characteristic function exp(-t|xi|^alpha)."""
    return sample_increments(params, t, 1, stream)[0]


# ---------------------------------------------------------------------------
# jump-resolved paths


@dataclass(frozen=True)
class JumpEvent:
    time: float
    pre: np.ndarray
    post: np.ndarray


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class JumpPath:
    """A path on [0, horizon] stored as arrays of resolved jump events.

    ``pre[k]`` and ``post[k]`` are X_{t_k-} and X_{t_k}.  Under the Drop policy
    the path is constant between events, so ``pre[k] == post[k-1]``.  Under
    BrownianMatch the gap is a Gaussian displacement and ``end`` holds X_T.
    """

    start: np.ndarray
    horizon: float
    times: np.ndarray
    pre: np.ndarray
    post: np.ndarray
    end: np.ndarray
    cutoff: float
    small_jump_policy: SmallJumpPolicy
    seed: int | None = None
    diffusion_var_rate: float = 0.0

    @property
    def d(self) -> int:
        return self.start.shape[0]

    @property
    def n_events(self) -> int:
        return self.times.shape[0]

    @property
    def events(self) -> tuple:
        return tuple(JumpEvent(float(t), p, q) for t, p, q in zip(self.times, self.pre, self.post))

    @property
    def jumps(self) -> np.ndarray:
        return self.post - self.pre

    def positions(self) -> np.ndarray:
        """Start followed by all post-jump positions, shape (n+1, d)."""
        return np.vstack([self.start[None, :], self.post])

    def truncate(self, horizon: float) -> "JumpPath":
        """The same path observed on [0, horizon] (Drop policy exact)."""
        if horizon >= self.horizon:
            return self
        k = int(np.searchsorted(self.times, horizon, side="right"))
        if self.small_jump_policy is SmallJumpPolicy.DROP:
            end = self.post[k - 1] if k else self.start
        else:
            tt, xx = self.skeleton()
            end = xx[min(np.searchsorted(tt, horizon, side="right"), len(tt)) - 1]
        return JumpPath(self.start, float(horizon), self.times[:k], self.pre[:k], self.post[:k],
                        _frozen(end), self.cutoff, self.small_jump_policy, self.seed,
                        self.diffusion_var_rate)

    def skeleton(self, mesh: float | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Time grid and positions through which the path passes.

        For Drop this is the start plus the post-jump points.  For BrownianMatch
        the Gaussian segments are filled with Brownian-bridge points on a grid of
        the given mesh; the bridge randomness is derived from the path seed so
        repeated calls agree.
        """
        if self.small_jump_policy is SmallJumpPolicy.DROP:
            return np.concatenate([[0.0], self.times]), self.positions()
        if mesh is None:
            mean_gap = self.horizon / (self.n_events + 1)
            mesh = min(0.01, mean_gap / 10.0)
        rng = np.random.default_rng([0 if self.seed is None else self.seed, 0xB1D6E])
        knots_t = np.concatenate([[0.0], self.times, [self.horizon]])
        left = np.vstack([self.start[None, :], self.post])
        right = np.vstack([self.pre, self.end[None, :]])
        ts, xs = [], []
        sd = math.sqrt(self.diffusion_var_rate)
        for k in range(len(knots_t) - 1):
            t0, t1 = knots_t[k], knots_t[k + 1]
            m = max(int(math.ceil((t1 - t0) / mesh)), 1)
            s = np.linspace(t0, t1, m + 1)
            if m > 1:
                # Brownian bridge from left[k] at t0 to right[k] at t1
                dt = np.diff(s)
                w = np.cumsum(rng.standard_normal((m, self.d)) * (sd * np.sqrt(dt))[:, None], axis=0)
                frac = ((s[1:] - t0) / (t1 - t0))[:, None]
                bridge = w - frac * w[-1]
                inner = left[k] + frac * (right[k] - left[k]) + bridge
                pts = np.vstack([left[k][None, :], inner[:-1], right[k][None, :]])
            else:
                pts = np.vstack([left[k][None, :], right[k][None, :]])
            ts.append(s)
            xs.append(pts)
        return np.concatenate(ts), np.vstack(xs)

    def position_at(self, t: float) -> np.ndarray:
        if not 0 <= t <= self.horizon:
            raise InvalidArgument("time outside [0, horizon]")
        tt, xx = self.skeleton()
        i = int(np.searchsorted(tt, t, side="right")) - 1
        return xx[max(i, 0)]

    def to_record(self) -> dict:
        """JSON-serializable record of the path."""
        return {
            "seed": self.seed,
            "start": self.start.tolist(),
            "horizon": self.horizon,
            "cutoff": self.cutoff,
            "policy": self.small_jump_policy.value,
            "end": self.end.tolist(),
            "events": [
                {"t": float(t), "pre": p.tolist(), "post": q.tolist()}
                for t, p, q in zip(self.times, self.pre, self.post)
            ],
        }

    @classmethod
    def from_record(cls, rec: dict, params: StableParams | None = None) -> "JumpPath":
        d = len(rec["start"])
        ev = rec["events"]
        times = np.array([e["t"] for e in ev], dtype=float)
        pre = np.array([e["pre"] for e in ev], dtype=float).reshape(-1, d)
        post = np.array([e["post"] for e in ev], dtype=float).reshape(-1, d)
        policy = SmallJumpPolicy.parse(rec["policy"])
        if "end" in rec:
            end = np.array(rec["end"], dtype=float)
        else:
            end = post[-1] if len(ev) else np.array(rec["start"], dtype=float)
        var = small_jump_variance_rate(params, rec["cutoff"]) if params and policy is SmallJumpPolicy.BROWNIAN_MATCH else 0.0
        return cls(_frozen(rec["start"]), float(rec["horizon"]), _frozen(times), _frozen(pre),
                   _frozen(post), _frozen(end), float(rec["cutoff"]), policy, rec.get("seed"), var)


def random_directions(d: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform points on the unit sphere of R^d, shape (n, d)."""
    if d == 1:
        return np.where(rng.random(n) < 0.5, -1.0, 1.0)[:, None]
    g = rng.standard_normal((n, d))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _draw_big_jumps(params: StableParams, horizon: float, cutoff: float, rng, rate_factor=1.0):
    rate = big_jump_rate(params, cutoff) * rate_factor
    n = int(rng.poisson(rate * horizon))
    times = np.sort(rng.uniform(0.0, horizon, n))
    radius = cutoff * (1.0 - rng.random(n)) ** (-1.0 / params.alpha)
    jumps = radius[:, None] * random_directions(params.d, n, rng)
    return times, jumps


def _check_path_args(params, start, horizon, cutoff):
    start = np.asarray(start, dtype=float).reshape(-1)
    if start.shape[0] != params.d:
        raise InvalidArgument(f"start has dimension {start.shape[0]}, expected {params.d}")
    if not horizon > 0:
        raise InvalidArgument("horizon must be positive")
    if not cutoff > 0:
        raise InvalidArgument("cutoff must be positive")
    return start


def sample_jump_path(params: StableParams, start, horizon: float, cutoff: float,
                     policy=SmallJumpPolicy.DROP, stream=None) -> JumpPath:
    """Jump-resolved path on [0, horizon] with jumps above ``cutoff`` resolved.

    ``stream`` is either an integer seed (recorded on the path) or a numpy
    Generator.
    """
    start = _check_path_args(params, start, horizon, cutoff)
    policy = SmallJumpPolicy.parse(policy)
    rng, seed = _as_rng(stream)
    times, jumps = _draw_big_jumps(params, horizon, cutoff, rng)
    n = times.shape[0]
    var = 0.0
    if policy is SmallJumpPolicy.BROWNIAN_MATCH:
        var = small_jump_variance_rate(params, cutoff)
        gaps = np.diff(np.concatenate([[0.0], times, [horizon]]))
        gauss = rng.standard_normal((n + 1, params.d)) * np.sqrt(var * gaps)[:, None]
        cum_g = np.cumsum(gauss, axis=0)
        cum_j = np.vstack([np.zeros((1, params.d)), np.cumsum(jumps, axis=0)])
        pre = start + cum_j[:-1] + cum_g[:-1]
        end = start + cum_j[-1] + cum_g[-1]
    else:
        cum_j = np.cumsum(jumps, axis=0)
        pre = start + np.vstack([np.zeros((1, params.d)), cum_j[:-1]]) if n else np.zeros((0, params.d))
        end = start + cum_j[-1] if n else start.copy()
    post = pre + jumps
    return JumpPath(_frozen(start), float(horizon), _frozen(times), _frozen(pre), _frozen(post),
                    _frozen(end), float(cutoff), policy, seed, var)


def iter_jump_paths(params: StableParams, start, horizon: float, cutoff: float, policy,
                    master_seed: int, n_paths: int, first_index: int = 0) -> Iterator[JumpPath]:
    """Paths ``first_index .. first_index + n_paths - 1`` of a seeded family."""
    for i in range(first_index, first_index + n_paths):
        yield sample_jump_path(params, start, horizon, cutoff, policy, path_seed(master_seed, i))


# ---------------------------------------------------------------------------
# regions, exits and hitting


@dataclass(frozen=True)
class Ball:
    center: Sequence[float]
    radius: float

    def contains(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.linalg.norm(x - np.asarray(self.center, dtype=float), axis=-1) < self.radius


@dataclass(frozen=True)
class Annulus:
    center: Sequence[float]
    r_in: float
    r_out: float

    def contains(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        r = np.linalg.norm(x - np.asarray(self.center, dtype=float), axis=-1)
        return (r > self.r_in) & (r < self.r_out)


@dataclass(frozen=True)
class WholeSpace:
    def contains(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.ones(x.shape[0], dtype=bool)


@dataclass(frozen=True)
class ExitData:
    tau: float  # math.inf when no exit before the horizon
    location_pre: np.ndarray | None
    location_post: np.ndarray | None

    @property
    def exited(self) -> bool:
        return math.isfinite(self.tau)


def exit_data(path: JumpPath, region) -> ExitData:
    """First exit of ``path`` from ``region`` within the horizon."""
    if not region.contains(path.start)[0]:
        raise InvalidArgument("path starts outside the region")
    if isinstance(region, WholeSpace):
        return ExitData(math.inf, None, None)
    if path.small_jump_policy is SmallJumpPolicy.DROP:
        outside = ~region.contains(path.post) if path.n_events else np.zeros(0, dtype=bool)
        idx = np.flatnonzero(outside)
        if idx.size == 0:
            return ExitData(math.inf, None, None)
        k = idx[0]
        return ExitData(float(path.times[k]), path.pre[k].copy(), path.post[k].copy())
    tt, xx = path.skeleton()
    idx = np.flatnonzero(~region.contains(xx))
    if idx.size == 0:
        return ExitData(math.inf, None, None)
    k = idx[0]
    return ExitData(float(tt[k]), xx[k - 1].copy(), xx[k].copy())


def ball_hitting_probability(params: StableParams, start, target: Ball) -> float:
    """Exact P_x(T_B < inf) for a ball B(c, r) and |x - c| > r.

    Equals the regularized incomplete beta I_{r^2/|x-c|^2}((d - alpha)/2, alpha/2).
    """
    params.require_transient()
    dist = float(np.linalg.norm(np.asarray(start, dtype=float) - np.asarray(target.center, dtype=float)))
    if dist <= target.radius:
        return 1.0
    return float(betainc((params.d - params.alpha) / 2, params.alpha / 2, (target.radius / dist) ** 2))


def hitting_prob_estimate(params: StableParams, start, target: Ball, horizon: float, n_paths: int,
                          stream: int, cutoff: float = 1e-2, policy=SmallJumpPolicy.DROP) -> McEstimate:
    """Monte Carlo estimate of P_x(T_B < horizon), a lower bound of P_x(T_B < inf).

    ``stream`` is the master seed of the path family.
    """
    params.require_transient()
    if target.contains(start)[0]:
        raise InvalidArgument("start lies inside the target ball")
    hits = np.zeros(n_paths)
    for i, path in enumerate(iter_jump_paths(params, start, horizon, cutoff, policy, stream, n_paths)):
        _, xx = path.skeleton()
        hits[i] = float(target.contains(xx).any())
    return McEstimate.from_samples(hits)
