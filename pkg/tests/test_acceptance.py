"""End-to-end acceptance suite.

Each test is one criterion with a single pass/fail outcome: closed-form
transform oracles, round trips, blow-up classification, the limit suites,
the boundary functionals, and solver-based validation of the two-term
boundary expansion on the interval and the ball.
"""

import json
import subprocess
import sys

import numpy as np
import pytest
from numpy.testing import assert_allclose

from blowup.expansion import (BoundaryExpansion, expansion_constants,
                              functional_limit_suite)
from blowup.karamata import perturbed_power, pure_power
from blowup.solver import fit_boundary_slope
from blowup.transform import (HTransform, Primitive, ScaledTail,
                              keller_osserman, verify_lemma2, verify_lemma3)


def test_closed_form_transform_oracle(ht_cubic):
    """h and its derivatives match the analytic inversion sqrt(2)/t for the
    cubic at p = 2."""
    t = np.geomspace(1e-4, 1.0, 40)
    h = np.array([ht_cubic(x) for x in t])
    assert_allclose(h, np.sqrt(2.0) / t, rtol=1e-8)
    for x in np.geomspace(1e-4, 1.0, 12):
        hv, h1, h2 = ht_cubic.derivs(x)
        assert_allclose(h1, -np.sqrt(2.0) / x ** 2, rtol=1e-7)
        assert_allclose(h2, 2.0 * np.sqrt(2.0) / x ** 3, rtol=1e-7)


@pytest.mark.parametrize("p", [2.0, 3.0])
@pytest.mark.parametrize("perturbed", [False, True])
def test_round_trip_identity(p, perturbed):
    """calF(h(t)) = t to 1e-9 relative across the working range for both
    exponents and both built-in nonlinearity families."""
    if perturbed:
        f = perturbed_power(sigma=2.0, c=1.6, alpha=2.0, B=1.0)
    else:
        f = pure_power(sigma=2.0, B=1.0)
    ht = HTransform(ScaledTail(Primitive(f, p)))
    lo, hi = ht.working_range()
    t = np.geomspace(lo * 1.01, hi * 0.99, 100)
    back = np.array([ht.tail(ht(x)) for x in t])
    assert_allclose(back, t, rtol=1e-9)


def test_blow_up_classification():
    """Superlinear cubic admits blow-up profiles for p = 2 and p = 3; the
    linear absorption does not.  Analytic and numeric evidence agree."""
    cases = [
        (pure_power(sigma=2.0), 2.0, "CONVERGES"),
        (pure_power(sigma=0.0), 2.0, "DIVERGES"),
        (pure_power(sigma=2.0), 3.0, "CONVERGES"),
    ]
    for f, p, expected in cases:
        rep = keller_osserman(Primitive(f, p))
        assert rep.classification == expected
        assert rep.agreement


def test_transform_limit_suite(ht_cubic, kernel_const):
    """Scaling limits of h at 0+: the closed-form parts hit their constants
    to 1e-6 after extrapolation, the slow parts to 1e-4 for a perturbed
    power."""
    claims = {"i": -1.0, "ii": -0.5, "iii": 0.5}
    for part in ("i", "ii", "iii"):
        rep = verify_lemma3(ht_cubic, kernel_const, 1.0, part)
        assert rep.passed, f"part {part} failed"
        (label, lr), = rep.parts.items()
        assert_allclose(lr.extrapolated, claims[part], atol=1e-6)
    f = perturbed_power(sigma=2.0, c=1.6, alpha=2.0, B=1.0)
    ht = HTransform(ScaledTail(Primitive(f, 2.0)))
    for part in ("iv", "v"):
        rep = verify_lemma3(ht, kernel_const, 1.0, part, rel_tol=1e-4)
        assert rep.passed, f"part {part} failed"


def test_absorption_limit_suite():
    """Tail limits of the absorption scaled by calF: pass for the pure power
    (identically zero numerators) and for an admissible perturbation."""
    for f in (pure_power(sigma=2.0, B=1.0),
              perturbed_power(sigma=2.0, c=1.6, alpha=2.0, B=1.0)):
        tail = ScaledTail(Primitive(f, 2.0))
        for part in ("i", "ii", "iii"):
            rep = verify_lemma2(f, 2.0, part, tail=tail)
            assert rep.passed, f"{f!r} part {part} failed"


def test_boundary_functional_limits(ht_cubic, kernel_const):
    """The combined boundary functional reaches its epsilon-scaled limit to
    1e-3 with verdicts independent of the mean-value parameter."""
    c = expansion_constants(p=2.0, sigma=2.0, ell1=1.0, L1=0.0, A=0.0, N=1)
    be = BoundaryExpansion(c, ht_cubic, kernel_const)
    rep = functional_limit_suite(be, eps=0.05, rel_tol=1e-3)
    assert rep.passed
    combined = {k: v for k, v in rep.parts.items() if k.startswith("combined")}
    assert len(combined) == 6          # two signs, three lambda values
    for sign in ("+", "-"):
        verdicts = {v.passed for k, v in combined.items() if f"sign={sign}" in k}
        assert verdicts == {True}
    s5 = [v for k, v in rep.parts.items() if k.startswith("S5")]
    assert all(lr.passed and abs(lr.claimed) == 0.0 for lr in s5)


def test_first_order_rate_interval(interval_const_solve):
    """u(d)*d -> sqrt(2) on the evaluation window for the cubic on the
    interval: the classical first-order blow-up rate."""
    sol, window = interval_const_solve["sol"], interval_const_solve["window"]
    d, u = sol.window_values(window)
    assert np.max(np.abs(u * d / np.sqrt(2.0) - 1.0)) < 0.05


def _slope_gates(fit, claimed):
    assert abs(fit.intercept) < 0.02
    assert fit.r2 > 0.95
    assert abs(fit.slope - claimed) <= 0.2 * abs(claimed), (
        f"fitted slope {fit.slope:.5f} vs claimed {claimed:+.5f}")


def test_second_order_gradient_slope(interval_gradient_solve, ht_cubic,
                                     kernel_const):
    """Potential gradient correction on the interval: fitted slope of the
    relative deviation against the stated constant -1/2."""
    c = expansion_constants(p=2.0, sigma=2.0, ell1=1.0, L1=0.0, A=1.0, N=1)
    be = BoundaryExpansion(c, ht_cubic, kernel_const)
    sol, window = interval_gradient_solve["sol"], interval_gradient_solve["window"]
    fit = fit_boundary_slope(sol, be, window)
    fit_half = fit_boundary_slope(sol, be, (window[0], window[1] / 2.0))
    assert abs(fit_half.slope - c.C1) <= abs(fit.slope - c.C1), \
        "discrepancy must shrink as the window tightens"
    _slope_gates(fit, c.C1)


def test_second_order_curvature_slope(ball_solve, ht_cubic, kernel_const):
    """Curvature correction on the unit ball: fitted slope matches 1/3."""
    c = expansion_constants(p=2.0, sigma=2.0, ell1=1.0, L1=0.0, A=0.0, N=3)
    be = BoundaryExpansion(c, ht_cubic, kernel_const)
    sol, window = ball_solve["sol"], ball_solve["window"]
    fit = fit_boundary_slope(sol, be, window)
    _slope_gates(fit, c.C1 + c.C2 * 1.0)


def test_truncated_solutions_nondecreasing(interval_const_solve,
                                           interval_gradient_solve,
                                           ball_solve):
    """Across every acceptance solve the truncated solutions increase
    nodewise with the boundary level (discrete comparison)."""
    for run in (interval_const_solve, interval_gradient_solve, ball_solve):
        assert run["info"].monotone_min_increment >= -1e-12


def test_validate_report_deterministic(tmp_path):
    """Two validation runs on the same configuration produce byte-identical
    reports apart from the timestamp."""
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "problem": {
            "p": 2.0,
            "nonlinearity": {"family": "pure_power", "sigma": 2.0, "B": 1e-6},
            "kernel": {"family": "constant"},
            "A": 0.0,
            "geometry": {"kind": "ball", "extent": 1.0, "dimension": 3},
        }}))
    reports = []
    for name in ("a", "b"):
        out = tmp_path / name
        res = subprocess.run(
            [sys.executable, "-m", "blowup.cli", "validate",
             "--config", str(cfg), "--out", str(out)],
            capture_output=True, text=True)
        assert res.returncode == 0, res.stderr
        lines = (out / "report.json").read_text().splitlines()
        reports.append([ln for ln in lines if '"timestamp"' not in ln])
    assert reports[0] == reports[1]
