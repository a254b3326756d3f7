"""The nine acceptance criteria, at their stated tolerances.

Each test records one PASS/FAIL line (printed in the terminal summary) and
then asserts. Criteria that the implementation does not meet stay red; the
reasons are recorded in the decisions ledger kept alongside the project.
"""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.linalg import eigh
from scipy.optimize import brentq

from conftest import ACCEPTANCE_LINES
from resumfem.fem import Operators
from resumfem.linalg import gauss_rule
from resumfem.recipes import ExperimentConfig, run_cell, run_recipe, setup
from resumfem.resummation import FlowEvaluator, pade_scalar
from resumfem.series import (
    HeatModel,
    compute_terms,
    dmp_norm,
    dmp_threshold,
    error_report,
    exact_heat_term,
    exact_inviscid_term,
    exact_viscous_term,
)


def _record(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} | {detail}"
    ACCEPTANCE_LINES[n] = line
    print(line)


def _fails(rep):
    return ", ".join(f"{c.label} got {c.value} want {c.golden}" for c in rep.failures)


def test_criterion_1_condition_numbers(tmp_path):
    # Table 2: 16 cells within 5%, best of the matrix variants
    rep = run_recipe("table2", ExperimentConfig(out=str(tmp_path)))
    n = len(rep.checked)
    ok = n == 16 and rep.passed
    _record(1, ok, f"Table 2 mass condition numbers, {n - len(rep.failures)}/{n} cells within 5% {_fails(rep)}")
    assert ok


def test_criterion_2_alpha_exponents(tmp_path):
    # Table 3: 24 cells within +-0.06, p=1 -> 1.96 everywhere
    rep = run_recipe("table3", ExperimentConfig(out=str(tmp_path)))
    n = len(rep.checked)
    ok = n == 24 and rep.passed
    p1 = [c.value for c in rep.checked if c.key["p"] == 1]
    _record(2, ok, f"Table 3 exponents, {n - len(rep.failures)}/{n} cells within 0.06; p=1 row {p1}")
    assert ok


def test_criterion_3_error_slopes(tmp_path):
    # Table 1: p=2..4 slopes within 0.3; p=1 early slope ~0.69 then a jump,
    # breakpoint within +-1
    rep = run_recipe("table1", ExperimentConfig(out=str(tmp_path)))
    wanted = [c for c in rep.checked if c.key["p"] >= 2 or c.key["q"] in ("slope_early", "breakpoint")]
    bad = [c for c in wanted if not c.passed]
    ok = len(wanted) == 20 and not bad
    detail = ", ".join(f"{c.label} got {c.value:.3g} want {c.golden}" for c in bad)
    _record(3, ok, f"Table 1 slopes and p=1 breakpoints, {len(wanted) - len(bad)}/{len(wanted)} within tolerance {detail}")
    assert ok


def test_criterion_4_stabilization_efficacy(tmp_path):
    # h=1/100, p=2: none breaks by k=3, geometric (c, R from the alpha/R table) stays below 100 e_1 to k=4
    rep = run_recipe("fig7", ExperimentConfig(out=str(tmp_path)))
    flags = {c.key["q"]: c.value for c in rep.checked}
    ok = rep.passed and flags == {"none_breaks_by_k3": True, "geometric_bounded_to_k4": True}
    _record(4, ok, f"stabilization efficacy at h=1/100, p=2: {flags}")
    assert ok


def test_criterion_5_heat_residual_table(tmp_path):
    # Table 4: 9 IRes cells within 10% and monotone in h and p
    rep = run_recipe("table4", ExperimentConfig(out=str(tmp_path)))
    cells = [c for c in rep.checked if "p" in c.key]
    mono = next(c for c in rep.checked if c.key.get("q") == "monotone_in_h_and_p")
    ok = rep.passed and len(cells) == 9
    vals = ", ".join(f"{c.label}={'x' if c.value is None else f'{c.value:.4f}'}/{c.golden}" for c in cells)
    _record(5, ok, f"Table 4 IRes {len(cells) - sum(not c.passed for c in cells)}/9 within 10%, monotone={mono.value}; {vals}")
    assert ok


def test_criterion_6_burgers_payoff():
    args = dict(model="burgers", nu=1.0, T=0.5, m=5, r=2, s=2, ng=20)

    def run(n, p, plan, dt):
        return run_cell(args["model"], args["nu"], n, p, plan, dt, args["T"], args["m"], args["r"], args["s"], args["ng"])

    ia, ra = run(20, 1, "geometric", 1e-4)
    ok_a = ra == "ReachedT" and abs(ia - 0.027263) <= 0.10 * 0.027263
    ib, rb = run(20, 2, "geometric", 5e-2)
    ok_b1 = rb == "ReachedT" and abs(ib - 0.0194) <= 0.10 * 0.0194
    none_reasons = [run(n, p, "none", 5e-2)[1] for n in (20, 50, 100, 200) for p in (1, 2, 3)]
    ok_b2 = all(r == "ResidualExplosion" for r in none_reasons)
    ic, rc = run(20, 3, "constant", 1e-2)
    ig, rg = run(20, 3, "geometric", 1e-2)
    ok_c = rc != "ReachedT" and rg == "ReachedT"
    ok = ok_a and ok_b1 and ok_b2 and ok_c
    _record(6, ok, f"(a) {'ok' if ok_a else 'no'} IRes={ia} {ra}; (b) geometric {'ok' if ok_b1 else 'no'} IRes={ib} {rb}, "
                   f"none explodes everywhere={ok_b2}; (c) {'ok' if ok_c else 'no'} constant {rc}, geometric {rg}")
    assert ok


def test_criterion_7_resummation_core():
    checks = {}
    T = np.array([[(-1.0) ** k / math.factorial(k)] for k in range(6)])
    f = FlowEvaluator.from_terms(T, 2, 2, 20)
    checks["exp flow 1e-6"] = abs(f.flow(0.1)[0] - math.exp(-0.1)) <= 1e-6
    # Pade reproduces a rational exactly: (1 + 2z) / (1 - z/2 + z^2/5)
    a0, b0 = np.array([1.0, 2.0]), np.array([1.0, -0.5, 0.2])
    c = np.zeros(4)
    for k in range(4):
        c[k] = (a0[k] if k < 2 else 0.0) - sum(b0[i] * c[k - i] for i in range(1, min(k, 2) + 1))
    a, b = pade_scalar(c, 1, 2)
    checks["pade rational"] = np.allclose(a, a0, atol=1e-13) and np.allclose(b, b0, atol=1e-13)
    lag = True
    for n in (5, 20, 40, 64):
        g = gauss_rule("laguerre", n)
        lag &= all(abs(math.fsum(g.weights * g.nodes**d) / math.factorial(d) - 1) <= 1e-12 for d in range(2 * n))
    checks["laguerre 2n-1 at 1e-12"] = lag
    fd = max(
        np.max(np.abs((f.flow(t + 1e-4) - f.flow(t - 1e-4)) / 2e-4 - f.flow_derivative(t))) for t in np.linspace(0.01, 0.3, 12)
    )
    checks["derivative vs differences 1e-6"] = fd <= 1e-6
    g40 = FlowEvaluator.from_terms(T, 2, 2, 40)
    ts = 1e-2 * np.arange(7)
    poly = np.polynomial.polynomial.polyfit(ts, [g40.flow(t)[0] for t in ts], 6)
    checks["taylor 1e-4"] = all(abs(poly[k] / T[k, 0] - 1) <= 1e-4 for k in (1, 2, 3))
    ok = all(checks.values())
    _record(7, ok, ", ".join(f"{k}={'ok' if v else 'no'}" for k, v in checks.items()))
    assert ok


def test_criterion_8_oracle_cross_checks():
    x = np.linspace(0, 1, 101)
    dev = max(np.max(np.abs(exact_viscous_term(k, 0.0, x) - exact_inviscid_term(k, x))) / max(1.0, np.max(np.abs(exact_inviscid_term(k, x))))
              for k in range(7))
    # h-halving order of e_1: 2 for p = 1, 2 and p - 1 for p >= 3; the observed
    # error ratio must lie within a factor 4 of 2**order
    orders = {}
    ok_order = True
    for p in (1, 2, 3, 4):
        es = []
        for n in (20, 40):
            space, full, red = setup(n, p)
            xi = space.node_coords[space.interior]
            t = compute_terms(HeatModel(1.0), space, red, np.sin(np.pi * xi), 1)
            es.append(error_report(t, lambda k: exact_heat_term(k, 1.0, xi)).e[1])
        expected = 2 if p <= 2 else p - 1
        ratio = es[0] / es[1]
        orders[p] = round(math.log2(ratio), 2)
        ok_order &= 2**expected / 4 <= ratio <= 2**expected * 4
    ok = dev <= 1e-12 and ok_order
    _record(8, ok, f"viscous(nu=0) vs inviscid max rel dev {dev:.1e}; e_1 orders {orders}")
    assert ok


def test_criterion_9_dmp():
    space, full, red = setup(10, 1)
    at_zero = dmp_norm(red.M, red.K, 1.0, 0.0, 8)
    lam = eigh(red.K, red.M, eigvals_only=True)
    m = 8
    poly = lambda z: sum(z**k / math.factorial(k) for k in range(m + 1))
    g = lambda t: np.max(np.abs(poly(-t * lam))) - 1.0
    ts = np.geomspace(1e-8, 1.0, 4001)
    i = np.nonzero([g(t) > 1e-12 for t in ts])[0][0]
    ref = brentq(g, ts[i - 1], ts[i], xtol=1e-14)
    got = dmp_threshold(red.M, red.K, 1.0, m)
    ok = at_zero == 1.0 and abs(got - ref) <= 0.01 * ref
    _record(9, ok, f"dmp_norm(0)={at_zero}; threshold {got:.6g} vs eigen oracle {ref:.6g}")
    assert ok


@pytest.fixture(autouse=True)
def _quiet_numpy():
    with np.errstate(over="ignore", invalid="ignore"):
        yield
