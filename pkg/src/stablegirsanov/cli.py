"""Command-line experiment runner.

    stablegirsanov run config.json [--override mc.n_paths=100 ...] [--figures] [--dump-paths]
    stablegirsanov validate [--matrix default|minimal|empty]
    stablegirsanov tables --what c1|r0 --params 3,1,1.5 [--params ...] [--C 1] [--eps 0.5 0.1]

Every run writes ``report.json`` (deterministic for a given config),
``manifest.json`` (config echo, seeds, versions, wall time) and one CSV per
table into the output directory.  Exit status: 0 when all checks pass,
1 when a check fails or the experiment raises, 2 on a bad config.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import math
import os
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import InvalidArgument, InvariantViolation, NumericFailure
from .kernels import make_kernel
from .quadrature import QuadratureSpec
from .stable_process import SmallJumpPolicy, StableParams

SCHEMA_VERSION = 1
EXPERIMENTS = ("Validate", "Dichotomy", "Entropy", "Counterexample", "Harnack", "Gauge", "PotentialTables")


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class MCSettings:
    n_paths: int = 200
    horizon: float = 30.0
    cutoff: float = 1e-2
    policy: str = "Drop"
    doublings: int = 4
    master_seed: int = 12345

    def __post_init__(self):
        if self.n_paths < 2:
            raise ConfigError("mc.n_paths must be at least 2")
        if not (self.horizon > 0 and math.isfinite(self.horizon)):
            raise ConfigError("mc.horizon must be positive and finite")
        if not self.cutoff > 0:
            raise ConfigError("mc.cutoff must be positive")
        if self.doublings < 1:
            raise ConfigError("mc.doublings must be at least 1")
        if self.master_seed < 0:
            raise ConfigError("mc.master_seed must be non-negative")
        try:
            SmallJumpPolicy.parse(self.policy)
        except InvalidArgument as e:
            raise ConfigError(str(e)) from None


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    params: StableParams
    kernel: dict
    mc: MCSettings
    quad: QuadratureSpec
    output_dir: str
    options: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(raw) - {"experiment", "params", "kernel", "mc", "quad", "output_dir", "options"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        exp = raw.get("experiment")
        if exp not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {exp!r}")
        try:
            p = raw.get("params", {"d": 3, "alpha": 1.0})
            params = StableParams(p["d"], p["alpha"])
            kernel = dict(raw.get("kernel", {"name": "zero", "params": {}}))
            kernel.setdefault("params", {})
            make_kernel(kernel["name"], kernel["params"], params)
            mc = MCSettings(**raw.get("mc", {}))
            qd = dict(raw.get("quad", {}))
            quad = QuadratureSpec(**qd)
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"invalid config: {e}") from None
        out = raw.get("output_dir") or os.environ.get("OUTPUT_DIR") or "out"
        return cls(exp, params, kernel, mc, quad, str(out), dict(raw.get("options", {})))

    def to_dict(self) -> dict:
        return {"experiment": self.experiment,
                "params": {"d": self.params.d, "alpha": self.params.alpha},
                "kernel": {"name": self.kernel["name"], "params": dict(self.kernel["params"])},
                "mc": {k: getattr(self.mc, k) for k in
                       ("n_paths", "horizon", "cutoff", "policy", "doublings", "master_seed")},
                "quad": self.quad.to_dict(), "output_dir": self.output_dir, "options": dict(self.options)}

    def make_kernel(self):
        return make_kernel(self.kernel["name"], self.kernel["params"], self.params)

    @property
    def policy(self) -> SmallJumpPolicy:
        return SmallJumpPolicy.parse(self.mc.policy)


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(raw: dict, overrides) -> dict:
    """Set dotted-path fields, e.g. ``mc.n_paths=100``; values are parsed as JSON when possible."""
    out = copy.deepcopy(raw)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, val = item.split("=", 1)
        parts = key.strip().split(".")
        node = out
        for p in parts[:-1]:
            nxt = node.setdefault(p, {})
            if not isinstance(nxt, dict):
                raise ConfigError(f"override {key!r} descends into a non-object")
            node = nxt
        node[parts[-1]] = _parse_value(val)
    return out


def load_config(path, overrides=()) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    return ExperimentConfig.from_dict(apply_overrides(raw, overrides))


# ---------------------------------------------------------------------------
# serialization


def to_jsonable(obj):
    """Plain JSON types; non-finite floats become the strings "inf", "-inf", "nan"."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isfinite(v):
            return v
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_csv(path: Path, rows: list[dict]):
    cols: list[str] = []
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        for r in rows:
            w.writerow({k: to_jsonable(r.get(k, "")) for k in cols})


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("THREADS", "1")))
    except ValueError:
        return 1


def pool_map(fn, items):
    """Ordered map over a process pool of ``THREADS`` workers (serial when 1)."""
    items = list(items)
    n = min(_threads(), len(items))
    if n <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


def _check(name, passed, **detail) -> dict:
    return {"name": name, "passed": bool(passed), **detail}


# ---------------------------------------------------------------------------
# experiments; each returns (results, checks, tables, path_records)


def _x0(cfg: ExperimentConfig) -> np.ndarray:
    x = cfg.options.get("x")
    x = np.zeros(cfg.params.d) if x is None else np.asarray(x, dtype=float).reshape(-1)
    if x.size != cfg.params.d:
        raise ConfigError("options.x has the wrong dimension")
    return x


def _battery_point(args):
    from .validation import run_battery
    (d, a), kernel, scale = args
    F = make_kernel(kernel["name"], kernel["params"], StableParams(d, a))
    return run_battery(kernel=F, scale=scale, points=[(d, a)])


def exp_validate(cfg: ExperimentConfig):
    from .potential import poisson_constant_report
    from .validation import MATRICES
    matrix = cfg.options.get("matrix", "default")
    if matrix not in MATRICES:
        raise ConfigError(f"unknown matrix {matrix!r}")
    scale = float(cfg.options.get("scale", 1.0))
    jobs = [((d, a), cfg.kernel, scale) for d, a in MATRICES[matrix]]
    rows = [r for part in pool_map(_battery_point, jobs) for r in part]
    checks = []
    for r in rows:
        tag = "".join(f",{k}={r[k]}" for k in ("xi", "g", "r") if k in r)
        checks.append(_check(f"{r['check']}[d={r['d']}{tag}]", r["passed"], lhs=r["lhs"], rhs=r["rhs"],
                             tol=r["tol"]))
    rows = [{k: v for k, v in r.items() if k != "printed_constant_report"} for r in rows]
    poisson = {f"d={d},alpha={a}": poisson_constant_report(StableParams(d, a)) for d, a in MATRICES[matrix]}
    return {"matrix": matrix, "battery": rows, "poisson_constant": poisson}, checks, {"battery": rows}, []


def exp_dichotomy(cfg: ExperimentConfig):
    from .girsanov import Verdict, dichotomy_diagnostic
    F = cfg.make_kernel()
    x = _x0(cfg)
    mc = cfg.mc
    tol = float(cfg.options.get("tol", 1e-3))
    thr = float(cfg.options.get("threshold", 0.05))
    base = dichotomy_diagnostic(cfg.params, F, x, mc.horizon, mc.n_paths, mc.doublings, mc.master_seed,
                                mc.cutoff, cfg.policy, tol, thr)
    reports = {"base": base}
    if cfg.options.get("tilted", True):
        reports["tilted"] = dichotomy_diagnostic(cfg.params, F, x, mc.horizon, mc.n_paths, mc.doublings,
                                                 mc.master_seed + 1, mc.cutoff, cfg.policy, tol, thr, tilted=True)
    checks = [_check(f"not_mixed[{k}]", r.verdict is not Verdict.MIXED, verdict=r.verdict.value,
                     fraction_flat=r.fraction_flat) for k, r in reports.items()]
    if "tilted" in reports:
        checks.append(_check("zero_two_consistency", reports["tilted"].verdict is base.verdict,
                             base=base.verdict.value, tilted=reports["tilted"].verdict.value))
    if "expect" in cfg.options:
        checks.append(_check("expected_verdict", base.verdict.value == cfg.options["expect"],
                             expected=cfg.options["expect"], got=base.verdict.value))
    table = []
    for k, h in enumerate(base.horizons):
        row = {"horizon": h, "mean_qv_base": float(base.qv[:, k].mean())}
        if "tilted" in reports:
            row["mean_qv_tilted"] = float(reports["tilted"].qv[:, k].mean())
        table.append(row)
    per_path = [{"law": k, "path": i, "qv": r.qv[i].tolist(), "flat": bool(r.flat[i])}
                for k, r in reports.items() for i in range(r.qv.shape[0])]
    results = {k: r.to_dict(include_paths=True) for k, r in reports.items()}
    return results, checks, {"dichotomy": table}, per_path


def exp_entropy(cfg: ExperimentConfig):
    from .functionals import compensator_field
    from .girsanov import entropy_green_profile, entropy_P_vs_Ptilde, entropy_Ptilde_vs_P
    F = cfg.make_kernel()
    x = _x0(cfg)
    mc = cfg.mc
    fwd = entropy_P_vs_Ptilde(cfg.params, F, x, mc.horizon, mc.n_paths, mc.master_seed, mc.cutoff,
                              mc.doublings, cfg.policy, cfg.quad)
    checks = []
    if cfg.options.get("expect_infinite", False):
        first, last = fwd.per_horizon[0], fwd.per_horizon[-1]
        grows = last.mean - first.mean > 3 * math.hypot(first.std_err, last.std_err)
        checks.append(_check("green_entropy_infinite", fwd.infinite, green=fwd.green))
        checks.append(_check("pathwise_entropy_grows", grows, first=first.mean, last=last.mean))
    else:
        agr = fwd.agreement()
        checks.append(_check("entropy_green_finite", not fwd.infinite, green=fwd.green))
        checks.append(_check("entropy_pathwise_vs_green", agr["ok"], pathwise=fwd.pathwise.mean,
                             green=fwd.green, diff=agr["diff"], budget=agr["budget"]))
    checks.append(_check("entropy_nonnegative", fwd.pathwise.mean >= -3 * fwd.pathwise.std_err,
                         value=fwd.pathwise.mean))
    profile = None
    if F.radial and not cfg.options.get("expect_infinite", False):
        radii = cfg.options.get("profile_radii", [0.0, 1.0, 2.0, 4.0, 8.0])
        profile = entropy_green_profile(cfg.params, F, radii)
        checks.append(_check("entropy_sup_evidence", profile["finite"] and profile["non_increasing"],
                             radii=profile["radii"], green=profile["green"]))
    rev_h = float(cfg.options.get("reverse_horizon", mc.horizon))
    h_eval = compensator_field(cfg.params, F, mc.cutoff) if cfg.options.get("reverse_cross", True) else None
    rev = entropy_Ptilde_vs_P(cfg.params, F, x, rev_h, mc.n_paths, mc.master_seed + 2, mc.cutoff,
                              cfg.policy, h_eval)
    checks.append(_check("reverse_entropy_sandwich", rev.sandwich_ok(), value=rev.tilted.mean,
                         lower=rev.c3 * rev.tilted_sq.mean, upper=rev.c4 * rev.tilted_sq.mean))
    if h_eval is not None:
        checks.append(_check("reverse_entropy_cross", rev.cross_ok(), tilted=rev.tilted.mean,
                             weighted=rev.weighted.mean))
    table = [{"horizon": h, "pathwise_mean": e.mean, "pathwise_std_err": e.std_err, "green": fwd.green}
             for h, e in zip(fwd.horizons, fwd.per_horizon)]
    results = {"forward": fwd.to_dict(), "reverse": rev.to_dict(), "green_profile": profile}
    return results, checks, {"entropy": table}, []


def exp_counterexample(cfg: ExperimentConfig):
    from .girsanov import borel_cantelli_terms, counterexample_divergence
    from .kernels import counterexample_geometry, x_minus_log1p
    from .stable_process import Ball, ball_hitting_probability, hitting_prob_estimate
    o = cfg.options
    kp = cfg.kernel["params"]
    gamma = float(o.get("gamma", kp.get("gamma", 0.25)))
    beta = float(o.get("beta", kp.get("beta", 1.0)))
    n_balls = int(o.get("n_balls", kp.get("n_balls", 4)))
    which = o.get("kernel", cfg.kernel["name"] if cfg.kernel["name"] in ("counterexample", "theorem3")
                  else "counterexample")
    transform = x_minus_log1p if o.get("transform") == "entropy" else None
    g_geom = 2 * gamma if which == "theorem3" else gamma
    bc = borel_cantelli_terms(cfg.params, g_geom, n_balls)
    rep = counterexample_divergence(cfg.params, gamma, beta, n_balls, kernel=which, transform=transform)
    centers, radii = counterexample_geometry(cfg.params, g_geom, n_balls)
    hits = []
    exact = [ball_hitting_probability(cfg.params, np.zeros(cfg.params.d), Ball(tuple(c), float(r)))
             for c, r in zip(centers, radii)]
    n_hit = int(o.get("hitting_paths", cfg.mc.n_paths))
    for n in range(n_balls):
        est = hitting_prob_estimate(cfg.params, np.zeros(cfg.params.d), Ball(tuple(centers[n]), float(radii[n])),
                                    cfg.mc.horizon, n_hit, cfg.mc.master_seed + n, cfg.mc.cutoff, cfg.policy)
        hits.append(est)
    bc_max = float(o.get("bc_max", 0.9))
    checks = [
        _check("borel_cantelli_sum", bc["sum"] < bc_max, value=bc["sum"], limit=bc_max),
        _check("per_ball_contributions_grow", rep.lower_bound_ok, contributions=rep.contributions),
    ]
    for n, (est, b, ex) in enumerate(zip(hits, bc["bound"], exact)):
        checks.append(_check(f"hitting_below_bound[n={n + 1}]",
                             est.mean <= min(1.0, b, ex) + 3 * est.std_err and ex <= b,
                             estimate=est.mean, std_err=est.std_err, bound=b, exact=ex))
    table = [{"n": n + 1, "center": bc["centers"][n], "radius": bc["radii"][n], "bc_term": bc["terms"][n],
              "bc_bound": bc["bound"][n], "contribution": rep.contributions[n],
              "partial_sum": float(np.sum(rep.contributions[:n + 1])),
              "hit_prob": hits[n].mean, "hit_std_err": hits[n].std_err, "hit_exact": exact[n]} for n in range(n_balls)]
    results = {"kernel": which, "gamma": gamma, "beta": beta, "n_balls": n_balls,
               "borel_cantelli": bc, "divergence": rep.to_dict(), "hitting": [h.to_dict() for h in hits]}
    return results, checks, {"counterexample": table}, []


def _gauge_cfg(cfg: ExperimentConfig):
    from .gauge import GaugeConfig
    return GaugeConfig(cfg.mc.horizon, cfg.mc.doublings, cfg.mc.cutoff, cfg.policy,
                       float(cfg.options.get("tol", 1e-3)))


def exp_harnack(cfg: ExperimentConfig):
    from .gauge import harnack_ratio_check, infinite_hitting_check
    F = cfg.make_kernel()
    R = tuple(float(r) for r in cfg.options.get("R_values", (1, 2, 4, 8)))
    rep = harnack_ratio_check(cfg.params, F, cfg.mc.n_paths, cfg.mc.master_seed, R, _gauge_cfg(cfg))
    d = rep.detail
    checks = [_check("harnack_scale", d["scale_ok"], max_ratio=rep.lhs, min_ratio=rep.rhs),
              _check("harnack_liminf", d["liminf_ok"], c_emp=d["c_emp"]),
              _check("radial_symmetry", d["radial_symmetry_ok"])]
    results = {"harnack": rep.to_dict()}
    if cfg.options.get("infinite_hitting", False):
        ih = infinite_hitting_check(cfg.params, cfg.mc.n_paths, cfg.mc.horizon, cfg.mc.master_seed + 1,
                                    cutoff=cfg.mc.cutoff)
        results["infinite_hitting"] = ih.to_dict()
        checks.append(_check("infinite_hitting", ih.passed, median_count=ih.detail["median_count"]))
    table = [{"R": a["R"], "min_u": a["min"], "max_u": a["max"], "ratio": a["ratio"]} for a in d["annuli"]]
    return results, checks, {"harnack": table}, []


def exp_gauge(cfg: ExperimentConfig):
    from .gauge import (estimate_u, jensen_bound_check, u_grid, u_integral_identity_check, u_limit_check,
                        u_martingale_check)
    from .kernels import tabulate_field
    from .potential import green_potential
    F = cfg.make_kernel()
    x = _x0(cfg)
    gc = _gauge_cfg(cfg)
    s = cfg.mc.master_seed
    n = cfg.mc.n_paths
    o = cfg.options
    if F.radial:
        h0 = tabulate_field(cfg.params, F, cfg.quad)
        gh = green_potential(cfg.params, h0, x, cfg.quad)
    else:
        gh = None
    direct = estimate_u(cfg.params, F, x, n, s, gc)
    radii = o.get("radii", [0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0])
    grid = u_grid(cfg.params, F, radii, int(o.get("grid_paths", n)), s + 1, gc)
    reps = [
        u_martingale_check(cfg.params, F, x, float(o.get("t", 1.0)), int(o.get("nested_paths", 2 * n)), s + 2,
                           grid, gc, direct),
        u_integral_identity_check(cfg.params, F, x, int(o.get("nested_paths", 2 * n)), s + 3, grid, gc,
                                  direct, None if gh is None or not math.isfinite(gh) else gh),
        jensen_bound_check(direct, None if gh is None or not math.isfinite(gh) else gh),
        u_limit_check(cfg.params, F, n, s + 4, grid, x, gc, float(o.get("delta", 0.05)),
                      float(o.get("min_fraction", 0.9))),
    ]
    checks = [_check(r.name, r.passed, lhs=r.lhs, rhs=r.rhs, budget=r.budget) for r in reps]
    results = {"green_h0": gh, "direct": direct.to_dict(), "grid": grid.to_rows(),
               "interp_residual": grid.residual, "checks": [r.to_dict() for r in reps]}
    return results, checks, {"gauge_grid": grid.to_rows()}, []


def exp_potential_tables(cfg: ExperimentConfig):
    from .potential import (THREE_G_QUAD, conditioned_expectation, poisson_constant_report,
                            poisson_mass, r0_of)
    o = cfg.options
    triples = [tuple(t) for t in o.get("triples", [[cfg.params.d, cfg.params.alpha, 1.5]])]
    refine = int(o.get("refine", 0))
    C = float(o.get("C", 1.0))
    eps_values = [float(e) for e in o.get("eps", [0.5])]
    quad = THREE_G_QUAD.refined(refine) if refine else THREE_G_QUAD
    c1 = pool_map(_c1_job, [(t, quad) for t in triples])
    checks = [_check(f"c1_finite[{t}]", math.isfinite(r.value) and all(math.isfinite(v) for v in r.values),
                     value=r.value) for t, r in zip(triples, c1)]
    rows_c1 = [{"d": int(t[0]), "alpha": float(t[1]), "beta": float(t[2]), "C1": r.value}
               for t, r in zip(triples, c1)]
    rows_r0 = [{**row, "C": C, "eps": e,
                "r0": r0_of(C, StableParams(row["d"], row["alpha"]), row["beta"], e, c1=row["C1"])}
               for row in rows_c1 for e in eps_values]
    poisson = poisson_constant_report(cfg.params)
    mass = poisson_mass(cfg.params, 1.0, np.zeros(cfg.params.d))
    checks.append(_check("poisson_mass", abs(mass - 1.0) <= 1e-3, mass=mass))
    results = {"c1": [r.to_dict() for r in c1], "r0": rows_r0, "poisson": poisson, "poisson_mass": mass}
    tables = {"c1": rows_c1, "r0": rows_r0}
    if o.get("conditioned", False):
        rows = []
        row = rows_r0[0]
        p = StableParams(row["d"], row["alpha"])
        F = make_kernel(o.get("conditioned_kernel", "fuchsian"),
                        {"C": C, "beta": row["beta"]}, p)
        radius = row["r0"] / 2.0
        pts = [float(v) for v in o.get("conditioned_points", [-0.5, 0.0, 0.5])]
        for a in pts:
            for b in pts:
                xa = np.zeros(p.d)
                wb = np.zeros(p.d)
                xa[0], wb[0] = a * radius, (b + 0.01 if a == b else b) * radius
                v = conditioned_expectation(p, np.zeros(p.d), radius, xa, wb, F, quad)
                rows.append({"x": a, "w": wb[0] / radius, "radius": radius, "value": v,
                             "killing_lower": math.exp(-row["eps"])})
        worst = max(r["value"] for r in rows)
        checks.append(_check("conditioned_below_eps", worst < row["eps"], worst=worst, eps=row["eps"]))
        # Jensen: E[e^{-A}] >= e^{-E A} >= e^{-eps}
        checks.append(_check("killing_bound", math.exp(-worst) >= math.exp(-row["eps"]) and math.exp(-worst) <= 1.0,
                             lower=math.exp(-worst)))
        results["conditioned"] = rows
        tables["conditioned"] = rows
    return results, checks, tables, []


def _c1_job(args):
    from .potential import c1_constant
    (d, a, b), quad = args
    return c1_constant(StableParams(int(d), float(a)), float(b), quad)


RUNNERS = {
    "Validate": exp_validate, "Dichotomy": exp_dichotomy, "Entropy": exp_entropy,
    "Counterexample": exp_counterexample, "Harnack": exp_harnack, "Gauge": exp_gauge,
    "PotentialTables": exp_potential_tables,
}


# ---------------------------------------------------------------------------
# orchestration


def _versions() -> dict:
    import scipy
    return {"stablegirsanov": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__}


def run(cfg: ExperimentConfig, figures: bool = False, dump_paths: bool = False) -> int:
    """Run one experiment and write its artifacts; returns the exit status."""
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    error = None
    try:
        results, checks, tables, paths = RUNNERS[cfg.experiment](cfg)
    except (InvalidArgument, InvariantViolation, NumericFailure) as e:
        results, checks, tables, paths = {}, [], {}, []
        error = {"type": type(e).__name__, "message": str(e)}
    wall = time.perf_counter() - t0
    failures = [c["name"] for c in checks if not c["passed"]]
    passed = error is None and not failures
    report = {"schema_version": SCHEMA_VERSION, "experiment": cfg.experiment, "config": cfg.to_dict(),
              "seeds": {"master_seed": cfg.mc.master_seed}, "passed": passed, "failures": failures,
              "error": error, "checks": checks, "results": results}
    files = ["report.json"]
    (out / "report.json").write_text(dumps(report))
    for name, rows in tables.items():
        if rows:
            write_csv(out / f"{name}.csv", rows)
            files.append(f"{name}.csv")
    if dump_paths and paths:
        with open(out / "paths.jsonl", "w") as fh:
            for rec in paths:
                fh.write(json.dumps(to_jsonable(rec), sort_keys=True) + "\n")
        files.append("paths.jsonl")
    if figures and tables:
        from .figures import render_tables
        files += render_tables(tables, out)
    manifest = {"schema_version": SCHEMA_VERSION, "config": cfg.to_dict(),
                "seeds": {"master_seed": cfg.mc.master_seed}, "versions": _versions(),
                "threads": _threads(), "files": files, "timing": {"wall_time_s": wall}}
    (out / "manifest.json").write_text(dumps(manifest))
    return 0 if passed else 1


def _summary(out_dir: str) -> str:
    rep = json.loads((Path(out_dir) / "report.json").read_text())
    lines = [f"{rep['experiment']}: {'PASS' if rep['passed'] else 'FAIL'}"]
    for c in rep["checks"]:
        lines.append(f"  {'ok  ' if c['passed'] else 'FAIL'} {c['name']}")
    if rep.get("error"):
        lines.append(f"  error: {rep['error']['type']}: {rep['error']['message']}")
    return "\n".join(lines)


def _parse_triple(text: str) -> tuple:
    parts = [p for p in text.replace(";", ",").split(",") if p.strip()]
    if len(parts) != 3:
        raise ConfigError(f"--params expects d,alpha,beta, got {text!r}")
    return (int(parts[0]), float(parts[1]), float(parts[2]))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stablegirsanov", description=__doc__.split("\n\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run an experiment from a JSON config")
    r.add_argument("config")
    r.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                   help="dotted-path override, e.g. mc.n_paths=100")
    r.add_argument("--figures", action="store_true", help="also render PNG figures from the CSV tables")
    r.add_argument("--dump-paths", action="store_true", help="write per-path records as JSONL")
    v = sub.add_parser("validate", help="run the consistency battery")
    v.add_argument("--matrix", default="default", choices=["default", "minimal", "empty"])
    v.add_argument("--output-dir", default=None)
    v.add_argument("--scale", type=float, default=1.0, help="sample-size multiplier")
    t = sub.add_parser("tables", help="C1 and r0 tables")
    t.add_argument("--what", required=True, choices=["c1", "r0"])
    t.add_argument("--params", action="append", required=True, metavar="D,ALPHA,BETA")
    t.add_argument("--C", type=float, default=1.0)
    t.add_argument("--eps", type=float, nargs="+", default=[0.5])
    t.add_argument("--refine", type=int, default=0)
    t.add_argument("--output-dir", default=None)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = load_config(args.config, args.override)
            figures, dump = args.figures, args.dump_paths
        elif args.command == "validate":
            cfg = ExperimentConfig.from_dict({
                "experiment": "Validate", "kernel": {"name": "fuchsian", "params": {"C": 1.0, "beta": 1.0}},
                "output_dir": args.output_dir or os.path.join(os.environ.get("OUTPUT_DIR", "out"), "validate"),
                "options": {"matrix": args.matrix, "scale": args.scale}})
            figures = dump = False
        else:
            triples = [_parse_triple(s) for s in args.params]
            cfg = ExperimentConfig.from_dict({
                "experiment": "PotentialTables", "params": {"d": triples[0][0], "alpha": triples[0][1]},
                "output_dir": args.output_dir or os.path.join(os.environ.get("OUTPUT_DIR", "out"), "tables"),
                "options": {"triples": [list(t) for t in triples], "C": args.C, "eps": args.eps,
                            "refine": args.refine}})
            figures = dump = False
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    status = run(cfg, figures, dump)
    if args.command == "tables":
        name = "c1.csv" if args.what == "c1" else "r0.csv"
        sys.stdout.write((Path(cfg.output_dir) / name).read_text())
    print(_summary(cfg.output_dir))
    return status


if __name__ == "__main__":
    sys.exit(main())
