"""Acceptance suite at desk scale: d=1, alpha=0.5 and d=3, alpha=1 unless noted.

Run with ``pytest tests/test_acceptance.py -v``; the terminal summary prints
one PASS/FAIL line per criterion.  Parts that cannot hold for the literal
kernel are strict xfails with the reason attached.
"""

import json
import math

import numpy as np
import pytest

from stablegirsanov.cli import ExperimentConfig, run
from stablegirsanov.girsanov import borel_cantelli_terms, counterexample_divergence
from stablegirsanov.kernels import counterexample_geometry, x_minus_log1p
from stablegirsanov.potential import THREE_G_QUAD, c1_constant, poisson_constant_report
from stablegirsanov.stable_process import (Ball, SmallJumpPolicy, StableParams, ball_hitting_probability,
                                           hitting_prob_estimate)
from stablegirsanov.validation import MATRICES, run_battery

crit = pytest.mark.criterion
MATRIX = MATRICES["default"]
P1, P3 = StableParams(1, 0.5), StableParams(3, 1.0)


def fuchsian(beta, capped=False):
    return {"name": "capped_fuchsian" if capped else "fuchsian", "params": {"C": 1.0, "beta": beta}}


def experiment(tmp_path_factory, name, raw):
    out = tmp_path_factory.mktemp(name)
    raw = dict(raw, output_dir=str(out))
    status = run(ExperimentConfig.from_dict(raw))
    rep = json.loads((out / "report.json").read_text())
    assert status == (0 if rep["passed"] else 1)
    return rep


def checks(rep):
    return {c["name"]: c for c in rep["checks"]}


def assert_all(rep):
    assert rep["error"] is None, rep["error"]
    bad = [c for c in rep["checks"] if not c["passed"]]
    assert not bad, bad


@pytest.fixture(scope="module")
def battery():
    return run_battery("default")


def rows(battery, name, d=None):
    out = [r for r in battery if r["check"] == name and (d is None or r["d"] == d)]
    assert out
    return out


# ---------------------------------------------------------------------------


@crit(1, "law correctness")
@pytest.mark.parametrize("d", [1, 3])
def test_law_correctness(battery, d):
    exact = rows(battery, "char_function_exact", d)
    jump = rows(battery, "char_function_jump", d)
    assert len(exact) == 3 and len(jump) == 3
    for r in exact:
        assert abs(r["lhs"] - r["rhs"]) <= 4 * r["std_err"]
    for r in jump:
        assert r["cutoff"] == 1e-3 and abs(r["lhs"] - r["rhs"]) <= 6 * r["std_err"]


@crit(2, "Levy-system identity")
def test_levy_system(battery):
    (r,) = rows(battery, "levy_system", 1)
    assert r["kernel"] == "fuchsian" and r["horizon"] == 10.0 and r["n"] == 10_000
    assert abs(r["lhs"] - r["rhs"]) <= r["tol"] and r["passed"]


@crit(2, "Levy-system identity")
def test_levy_system_d3_short_horizon(battery):
    # d=3 runs on a shorter horizon; see the decisions ledger
    (r,) = rows(battery, "levy_system", 3)
    assert r["passed"]


@crit(3, "Doleans algebra")
@pytest.mark.parametrize("check", ["doleans_pair", "inverse_density"])
def test_doleans(battery, check):
    for r in rows(battery, check):
        assert r["n"] == 1000 and r["lhs"] < 1e-10


@crit(4, "change of measure")
def test_importance_sampling(battery):
    rs = rows(battery, "importance_sampling")
    assert {r["g"] for r in rs} == {"halfspace", "exp_decay"} and len(rs) == 2 * len(MATRIX)
    for r in rs:
        assert abs(r["lhs"] - r["rhs"]) <= r["tol"]


# ---------------------------------------------------------------------------

ENTROPY_MC = {"n_paths": 200, "horizon": 30.0, "cutoff": 0.01, "doublings": 4, "master_seed": 3}


@pytest.fixture(scope="module")
def entropy_literal(tmp_path_factory):
    return experiment(tmp_path_factory, "entropy_literal", {
        "experiment": "Entropy", "params": {"d": 3, "alpha": 1.0}, "kernel": fuchsian(1.0),
        "mc": ENTROPY_MC, "options": {"reverse_horizon": 10.0}})


@crit(5, "entropy cross-check")
@pytest.mark.xfail(strict=True, reason="the literal Fuchsian kernel with beta=1 has h ~ log r / r in d=3, "
                                       "so its Green potential and the entropy are infinite")
def test_entropy_literal_kernel(entropy_literal):
    c = checks(entropy_literal)
    assert c["entropy_green_finite"]["passed"] and c["entropy_pathwise_vs_green"]["passed"]


@crit(5, "entropy cross-check")
def test_entropy_literal_reverse_sandwich(entropy_literal):
    c = checks(entropy_literal)
    assert c["reverse_entropy_sandwich"]["passed"] and c["reverse_entropy_cross"]["passed"]
    assert entropy_literal["results"]["forward"]["green"] == "inf"


@crit(5, "entropy cross-check")
def test_entropy_capped_kernel(tmp_path_factory):
    rep = experiment(tmp_path_factory, "entropy_capped", {
        "experiment": "Entropy", "params": {"d": 3, "alpha": 1.0}, "kernel": fuchsian(1.0, capped=True),
        "mc": ENTROPY_MC, "options": {"reverse_horizon": 10.0}})
    assert_all(rep)
    assert math.isfinite(rep["results"]["forward"]["green"])


# ---------------------------------------------------------------------------

DICHOTOMY_MC = {"n_paths": 100, "horizon": 30.0, "cutoff": 0.01, "doublings": 4, "master_seed": 7}


def dichotomy(tmp_path_factory, name, d, a, kernel, expect, mc=DICHOTOMY_MC):
    return experiment(tmp_path_factory, name, {
        "experiment": "Dichotomy", "params": {"d": d, "alpha": a}, "kernel": kernel, "mc": mc,
        "options": {"expect": expect}})


@crit(6, "dichotomy")
@pytest.mark.xfail(strict=True, reason="the literal Fuchsian kernel accumulates F^2 from large jumps at "
                                       "every scale (h ~ |x|^-alpha), so flatness fails")
def test_dichotomy_literal_kernel(tmp_path_factory):
    for d, a in MATRIX:
        assert_all(dichotomy(tmp_path_factory, f"dich_lit{d}", d, a, fuchsian(1.0), "ConvergentAll"))


@crit(6, "dichotomy")
@pytest.mark.parametrize("d,a", MATRIX)
def test_dichotomy_capped_kernel(tmp_path_factory, d, a):
    assert_all(dichotomy(tmp_path_factory, f"dich_cap{d}", d, a, fuchsian(2.0, capped=True), "ConvergentAll"))


@crit(6, "dichotomy")
@pytest.mark.parametrize("d,a", MATRIX)
def test_dichotomy_annulus(tmp_path_factory, d, a):
    rep = dichotomy(tmp_path_factory, f"dich_ann{d}", d, a, {"name": "annulus", "params": {"value": 0.5}},
                    "DivergentAll")
    assert_all(rep)
    assert rep["results"]["base"]["verdict"] == "DivergentAll"


# ---------------------------------------------------------------------------

CE_RAW = {"experiment": "Counterexample", "params": {"d": 1, "alpha": 0.5},
          "kernel": {"name": "counterexample", "params": {"gamma": 0.25, "beta": 1.0, "n_balls": 4}},
          "mc": {"n_paths": 500, "horizon": 30.0, "cutoff": 0.01, "master_seed": 7}}


@pytest.fixture(scope="module")
def counterexample_d1(tmp_path_factory):
    return experiment(tmp_path_factory, "ce", CE_RAW)


@crit(7, "counterexample")
@pytest.mark.xfail(strict=True, reason="in d=1 with alpha=0.5 the constraint alpha-gamma < 1/2 forces "
                                       "ratios (r_n/|x_n|)^(1/2) near 2^(-n/2); the four terms sum to 1.86")
def test_counterexample_borel_cantelli_d1(counterexample_d1):
    assert checks(counterexample_d1)["borel_cantelli_sum"]["passed"]


@crit(7, "counterexample")
def test_counterexample_hitting_d1(counterexample_d1):
    c = checks(counterexample_d1)
    hits = [v for k, v in c.items() if k.startswith("hitting_below_bound")]
    assert len(hits) == 4 and all(h["passed"] for h in hits)


@crit(7, "counterexample")
def test_counterexample_d3():
    gamma = 0.6
    bc = borel_cantelli_terms(P3, gamma, 4)
    assert bc["sum"] < 0.9
    centers, radii = counterexample_geometry(P3, gamma, 4)
    for n in range(4):
        ball = Ball(tuple(centers[n]), float(radii[n]))
        exact = ball_hitting_probability(P3, np.zeros(3), ball)
        est = hitting_prob_estimate(P3, np.zeros(3), ball, 300.0, 400, 40 + n, 0.5, SmallJumpPolicy.DROP)
        assert exact <= bc["bound"][n]
        assert est.mean <= min(1.0, bc["bound"][n]) + 3 * est.std_err


@crit(7, "counterexample")
def test_counterexample_contributions(counterexample_d1):
    contrib = counterexample_d1["results"]["divergence"]["contributions"]
    assert len(contrib) == 4
    assert all(v > 0.5 * contrib[0] for v in contrib)


@crit(7, "counterexample")
def test_theorem3_absolutely_continuous_with_infinite_entropy(tmp_path_factory):
    # finite-ball truncation: horizons must exceed the time scale |x_N|^alpha of the last ball
    rep = dichotomy(tmp_path_factory, "dich_t3", 1, 0.5,
                    {"name": "theorem3", "params": {"gamma": 0.2, "beta": 0.6, "n_balls": 2}}, "ConvergentAll",
                    {"n_paths": 200, "horizon": 1000.0, "cutoff": 0.05, "doublings": 4, "master_seed": 7})
    assert_all(rep)
    ent = counterexample_divergence(P1, 0.2, 0.6, 4, kernel="theorem3", transform=x_minus_log1p)
    assert ent.lower_bound_ok
    partial = np.cumsum(ent.contributions)
    assert np.all(partial >= 0.5 * ent.contributions[0] * np.arange(1, 5))


# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def tables(tmp_path_factory):
    return experiment(tmp_path_factory, "tables", {
        "experiment": "PotentialTables", "params": {"d": 3, "alpha": 1.0},
        "options": {"triples": [[3, 1.0, 1.5]], "C": 1.0, "eps": [0.5], "conditioned": True}})


@crit(8, "killing-bound chain")
def test_killing_bound_chain(tables):
    assert_all(tables)
    grid = tables["results"]["conditioned"]
    assert len(grid) == 9
    for r in grid:
        assert 0.0 <= r["value"] < 0.5
        assert math.exp(-0.5) <= math.exp(-r["value"]) <= 1.0


@crit(9, "3G stability")
@pytest.mark.slow
def test_three_g_stability():
    base = c1_constant(P3, 1.5, THREE_G_QUAD)
    fine = c1_constant(P3, 1.5, THREE_G_QUAD.refined(1))
    assert all(math.isfinite(v) for v in base.values + fine.values)
    assert abs(fine.value - base.value) / base.value < 0.05


# ---------------------------------------------------------------------------

GAUGE_MC = {"n_paths": 300, "horizon": 10.0, "cutoff": 0.05, "doublings": 4, "master_seed": 5}


@crit(10, "gauge suite")
@pytest.mark.xfail(strict=True, reason="for the literal Fuchsian kernel G h diverges logarithmically, "
                                       "so A_inf is infinite and u vanishes")
def test_gauge_literal_kernel(tmp_path_factory):
    assert_all(experiment(tmp_path_factory, "gauge_lit", {
        "experiment": "Gauge", "params": {"d": 3, "alpha": 1.0}, "kernel": fuchsian(2.0), "mc": GAUGE_MC}))


@crit(10, "gauge suite")
def test_gauge_capped_kernel(tmp_path_factory):
    rep = experiment(tmp_path_factory, "gauge_cap", {
        "experiment": "Gauge", "params": {"d": 3, "alpha": 1.0}, "kernel": fuchsian(2.0, capped=True),
        "mc": GAUGE_MC})
    assert_all(rep)
    assert set(checks(rep)) == {"u_martingale", "u_integral_identity", "jensen_bound", "u_limit"}


@crit(10, "gauge suite")
@pytest.mark.parametrize("capped", [False, True])
def test_harnack(tmp_path_factory, capped):
    rep = experiment(tmp_path_factory, f"harnack{int(capped)}", {
        "experiment": "Harnack", "params": {"d": 3, "alpha": 1.0}, "kernel": fuchsian(2.0, capped),
        "mc": dict(GAUGE_MC, n_paths=200, master_seed=24)})
    assert_all(rep)
    assert [a["R"] for a in rep["results"]["harnack"]["detail"]["annuli"]] == [1.0, 2.0, 4.0, 8.0]


# ---------------------------------------------------------------------------


@crit(11, "Poisson normalization")
def test_poisson_normalization(battery):
    for r in rows(battery, "poisson_mass"):
        assert abs(r["lhs"] - 1.0) <= 1e-3
    for d, a in MATRIX:
        rep = poisson_constant_report(StableParams(d, a))
        assert rep["standard_rel_err"] < 1e-3
        # the discrepancy is reported, not patched: the printed form differs by a power of pi
        assert abs(rep["log_pi_of_ratio"] - (d + 2)) < 1e-3


# ---------------------------------------------------------------------------


@crit(12, "determinism")
@pytest.mark.parametrize("raw", [
    {"experiment": "Gauge", "params": {"d": 3, "alpha": 1.0}, "kernel": fuchsian(2.0, capped=True),
     "mc": dict(GAUGE_MC, n_paths=100)},
    dict(CE_RAW, mc=dict(CE_RAW["mc"], n_paths=100)),
    {"experiment": "Validate", "kernel": fuchsian(1.0), "options": {"matrix": "minimal", "scale": 0.05}},
], ids=["gauge", "counterexample", "validate"])
def test_determinism(tmp_path, raw):
    cfg = ExperimentConfig.from_dict(dict(raw, output_dir=str(tmp_path)))
    blobs = []
    for _ in range(2):
        status = run(cfg)
        blobs.append(((tmp_path / "report.json").read_bytes(), status))
    assert blobs[0] == blobs[1]
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert "wall_time_s" in man["timing"] and "timing" not in json.loads(blobs[0][0])
