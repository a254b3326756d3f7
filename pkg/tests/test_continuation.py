"""Adaptive continuation, fixed-step marching and the integrated residual."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from resumfem.continuation import (
    ContinuationParams,
    ContinuationTrace,
    StepRecord,
    advance,
    fixed_step_integrate,
    integrated_residual,
)
from resumfem.errors import TooFewPoints
from resumfem.fem import Operators
from resumfem.recipes import run_cell, setup
from resumfem.resummation import FlowEvaluator, borel, pade, partial_sum_radius
from resumfem.series import HeatModel, StabilizationPlan, compute_terms, plan_for


def _heat_setup(n=10, p=1):
    space, full, red = setup(n, p)
    x = space.node_coords[space.interior]
    return space, full, red, np.sin(np.pi * x)


@pytest.fixture(scope="module")
def heat_trace():
    space, full, red, u0 = _heat_setup()
    return advance(HeatModel(1.0), space, red, u0, StabilizationPlan.none(), ContinuationParams())


def test_params_validation():
    with pytest.raises(ValueError):
        ContinuationParams(eps=0)
    with pytest.raises(ValueError):
        ContinuationParams(T=-1)
    with pytest.raises(ValueError):
        ContinuationParams(growth=1.0)
    with pytest.raises(ValueError):
        ContinuationParams(m=5, r=1, s=1)


def test_adaptive_heat_reaches_T(heat_trace):
    # [DERIVED] run + residual audit
    tr = heat_trace
    assert tr.completed
    assert tr.times[-1] == pytest.approx(1.0, abs=1e-12)
    assert np.all(np.diff(tr.times) > 0)
    assert tr.times[-1] <= 1.0 + 1e-12
    assert np.all(tr.residuals[1:] <= 1e-3)


def test_adaptive_empty_interval():
    # [TRIVIAL] T = t0
    space, full, red, u0 = _heat_setup()
    tr = advance(HeatModel(1.0), space, red, u0, None, ContinuationParams(T=0.0))
    assert tr.completed and tr.records == []


@pytest.mark.parametrize("eps", [1e-3, 1e-4, 1e-5])
def test_adaptive_scalar_ode(eps):
    # [DERIVED] u' = -u with one dof: u(1) = e^-1. A relative defect eps in
    # u' perturbs u(1) by at most eps * int_0^1 |u'| dt = eps (1 - e^-1).
    ops = Operators.from_matrices([[1.0]], [[1.0]])
    tr = advance(HeatModel(1.0), None, ops, np.array([1.0]), None, ContinuationParams(eps=eps))
    assert tr.completed
    assert abs(tr.final_state[0] - math.exp(-1.0)) <= eps * (1 - math.exp(-1.0))
    if eps <= 1e-5:
        assert tr.final_state[0] == pytest.approx(math.exp(-1.0), abs=1e-5)


def test_first_step_seed_and_growth_replay(heat_trace):
    # the accepted first step is the partial-sum radius times 1.1**j and
    # the next factor of 1.1 fails the residual test
    space, full, red, u0 = _heat_setup()
    p = ContinuationParams()
    terms = compute_terms(HeatModel(1.0), space, red, u0, p.m)
    seed = partial_sum_radius(terms, p.eps)
    dt = heat_trace.records[1].dt
    j = round(math.log(dt / seed) / math.log(p.growth))
    assert j >= 0
    assert dt == pytest.approx(seed * p.growth**j, rel=1e-12)
    f = FlowEvaluator(u0, pade(borel(terms).coeffs, p.r, p.s), p.ng)
    from resumfem.resummation import residual

    u, du = f.state(dt * p.growth)
    assert residual(HeatModel(1.0), red, u, du) > p.eps


def test_adaptive_is_deterministic(heat_trace):
    space, full, red, u0 = _heat_setup()
    again = advance(HeatModel(1.0), space, red, u0, StabilizationPlan.none(), ContinuationParams())
    np.testing.assert_array_equal(again.times, heat_trace.times)
    np.testing.assert_array_equal(again.residuals, heat_trace.residuals)
    np.testing.assert_array_equal(again.final_state, heat_trace.final_state)


def test_fixed_step_clamps_final_step():
    space, full, red, u0 = _heat_setup()
    tr = fixed_step_integrate(HeatModel(1.0), space, red, u0, None, 0.03, 0.1)
    assert tr.completed
    np.testing.assert_allclose(tr.times, [0, 0.03, 0.06, 0.09, 0.1], atol=1e-15)
    assert tr.records[-1].dt == pytest.approx(0.01)


def test_fixed_step_tracks_exact_heat_decay():
    # the flow follows the semi-discrete solution exp(-t M^-1 K) u0
    from scipy.linalg import eigh

    space, full, red, _ = _heat_setup(10, 1)
    x = space.node_coords[space.interior]
    u0 = x * (1 - x) * (1 + 3 * x)  # excites every discrete mode
    tr = fixed_step_integrate(HeatModel(1.0), space, red, u0, None, 2e-4, 0.05)
    lam, V = eigh(red.K, red.M)
    exact = V @ (np.exp(-0.05 * lam) * (V.T @ (red.M @ u0)))
    np.testing.assert_allclose(tr.final_state, exact, rtol=1e-6, atol=1e-8)


@pytest.mark.xfail(strict=True, reason="absolute residual values of the heat table not reproduced; see decisions ledger")
def test_heat_fixed_step_table_value():
    # [PAPER] Table 4, p=1, h=1/20: 0.0573 (10%)
    ires, reason = run_cell("heat", 1.0, 20, 1, "geometric", 5e-3, 1.0, 5, 2, 2, 20)
    assert reason == "ReachedT"
    assert ires == pytest.approx(0.0573, rel=0.10)


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="absolute residual values of the Burgers table not reproduced; see decisions ledger")
def test_burgers_fixed_step_table_value():
    # [PAPER] Table 8, dt=1e-4, plan none, p=1, h=1/20: 0.027516 (10%)
    ires, reason = run_cell("burgers", 1.0, 20, 1, "none", 1e-4, 0.5, 5, 2, 2, 20)
    assert reason == "ReachedT"
    assert ires == pytest.approx(0.027516, rel=0.10)


def test_burgers_large_step_explodes():
    # [PAPER] Table 8, dt=5e-2, plan none, p=2, h=1/50: "x"
    ires, reason = run_cell("burgers", 1.0, 50, 2, "none", 5e-2, 0.5, 5, 2, 2, 20)
    assert ires is None and reason == "ResidualExplosion"


def test_trace_csv(tmp_path, heat_trace):
    path = tmp_path / "t.csv"
    heat_trace.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "n,t_n,dt_n,res_n"
    assert len(lines) == len(heat_trace.records) + 1
    assert "reason=ReachedT" in heat_trace.summary()


# integrated residual ----------------------------------------------------------


def _trace(ts, rs):
    return ContinuationTrace([StepRecord(i, t, 0.0, r, np.zeros(1)) for i, (t, r) in enumerate(zip(ts, rs))])


def test_integrated_residual_examples():
    # [TRIVIAL] constant residual and the two-point case
    assert integrated_residual(_trace([0, 0.3, 1.0], [2.0, 2.0, 2.0])) == pytest.approx(2.0)
    assert integrated_residual(_trace([0, 1], [0, 2])) == pytest.approx(1.0)
    with pytest.raises(TooFewPoints):
        integrated_residual(_trace([0], [1]))


@given(st.lists(st.floats(0.01, 1.0), min_size=3, max_size=12), st.lists(st.floats(0, 10), min_size=12, max_size=12),
       st.integers(1, 10))
def test_integrated_residual_additive(steps, res, cut):
    t = np.concatenate([[0.0], np.cumsum(steps)])
    r = res[: len(t)]
    cut = min(cut, len(t) - 2)
    whole = integrated_residual(_trace(t, r))
    parts = integrated_residual(_trace(t[: cut + 1], r[: cut + 1])) + integrated_residual(_trace(t[cut:], r[cut:]))
    assert whole == pytest.approx(parts, rel=1e-12, abs=1e-12)
