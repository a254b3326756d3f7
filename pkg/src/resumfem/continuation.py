"""Time marching with the BPL flow: adaptive continuation and fixed steps."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NonFinite, PoleOnPath, StepCollapse, TooFewPoints, ZeroDerivative, ZeroHighestTerm
from .linalg import gauss_rule
from .resummation import FlowEvaluator, borel, pade, partial_sum_radius, residual
from .series import StabilizationPlan, TermSolver, compute_terms

EXPLOSION_LIMIT = 1e3
MAX_HALVINGS = 40


@dataclass(frozen=True)
class ContinuationParams:
    m: int = 5
    eps: float = 1e-3
    r: int = 2
    s: int = 2
    ng: int = 20
    T: float = 1.0
    t0: float = 0.0
    growth: float = 1.1
    dt: float | None = None  # None selects the adaptive policy
    max_steps: int = 100_000
    residual_norm: str = "euclid"
    residual_rows: str = "interior"  # or "all": boundary rows of the assembled system too

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.T < self.t0:
            raise ValueError("T must not precede t0")
        if self.growth <= 1:
            raise ValueError("growth factor must exceed 1")
        if self.r + self.s != self.m - 1:
            raise ValueError(f"need r + s = m - 1, got {self.r} + {self.s} != {self.m - 1}")
        if self.dt is not None and self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.residual_rows not in ("interior", "all"):
            raise ValueError(f"unknown residual_rows {self.residual_rows!r}")


@dataclass
class StepRecord:
    n: int
    t: float
    dt: float
    res: float
    u: np.ndarray = field(repr=False)


@dataclass
class ContinuationTrace:
    records: list[StepRecord] = field(default_factory=list)
    reason: str = "Running"

    @property
    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.records])

    @property
    def residuals(self) -> np.ndarray:
        return np.array([r.res for r in self.records])

    @property
    def final_state(self) -> np.ndarray:
        return self.records[-1].u

    @property
    def completed(self) -> bool:
        return self.reason == "ReachedT"

    @property
    def ires(self) -> float:
        return integrated_residual(self)

    def to_csv(self, path) -> None:
        from .io import write_rows

        write_rows(path, ["n", "t_n", "dt_n", "res_n"], [(r.n, r.t, r.dt, r.res) for r in self.records])

    def summary(self) -> str:
        try:
            ires = f"{self.ires:.17g}"
        except TooFewPoints:
            ires = "nan"
        return f"IRes={ires} steps={max(len(self.records) - 1, 0)} reason={self.reason}"


def integrated_residual(trace) -> float:
    """Trapezoidal integral of the recorded residuals over the recorded times."""
    recs = trace.records if isinstance(trace, ContinuationTrace) else trace
    if len(recs) < 2:
        raise TooFewPoints("integrated residual needs at least two records")
    t = np.array([r.t for r in recs])
    res = np.array([r.res for r in recs])
    return float(np.trapezoid(res, t))


class _Stepper:
    """Shared per-run machinery: terms, Pade, flow and residual."""

    def __init__(self, model, space, ops, plan, params: ContinuationParams, full_ops=None):
        self.model = model
        self.space = space
        self.ops = ops
        self.plan = plan or StabilizationPlan.none()
        self.p = params
        self.rule = gauss_rule("laguerre", params.ng)
        self.solver = TermSolver(ops.M, ops.K)
        self.full_ops = full_ops if params.residual_rows == "all" else None
        if params.residual_rows == "all" and full_ops is None:
            raise ValueError("residual_rows='all' needs the unreduced operators")

    def terms(self, u):
        return compute_terms(self.model, self.space, self.ops, u, self.p.m, self.plan, self.solver)

    def evaluator(self, terms) -> FlowEvaluator:
        return FlowEvaluator(terms.terms[0], pade(borel(terms).coeffs, self.p.r, self.p.s), self.rule)

    def residual(self, u, du) -> float:
        try:
            return residual(self.model, self.ops, u, du, self.p.residual_norm, self.full_ops)
        except ZeroDerivative as exc:
            return exc.absolute

    def trial(self, f: FlowEvaluator, dt: float):
        u, du = f.state(dt)
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(du))):
            return u, math.inf
        res = self.residual(u, du)
        return u, res if math.isfinite(res) else math.inf


def advance(model, space, ops, u0, plan, params: ContinuationParams, full_ops=None) -> ContinuationTrace:
    """Adaptive continuation: seed from the partial-sum radius, grow by ``growth`` while Res <= eps."""
    p = params
    st = _Stepper(model, space, ops, plan, p, full_ops)
    u = np.asarray(u0, dtype=float).copy()
    t = p.t0
    trace = ContinuationTrace()
    if p.T <= p.t0:
        trace.reason = "ReachedT"
        return trace
    tiny = 1e-12 * p.T
    prev_dt = None
    n = 0
    while True:
        if t >= p.T - tiny:
            trace.reason = "ReachedT"
            return trace
        if n >= p.max_steps:
            trace.reason = "MaxSteps"
            return trace
        terms = st.terms(u)
        f = st.evaluator(terms)
        if n == 0:
            _, du0 = f.state(0.0)
            trace.records.append(StepRecord(0, t, 0.0, st.residual(u, du0), u.copy()))
        try:
            dt = partial_sum_radius(terms, p.eps)
        except ZeroHighestTerm:
            dt = prev_dt if prev_dt is not None else (p.T - p.t0) / 100.0
        remaining = p.T - t
        dt = min(dt, remaining)
        # first trial: halve until the residual test passes
        res = math.inf
        for _ in range(MAX_HALVINGS + 1):
            try:
                u_new, res = st.trial(f, dt)
            except PoleOnPath:
                res = math.inf
            if res <= p.eps or dt * 0.5 < tiny:
                break
            dt *= 0.5
        if res > p.eps:
            raise StepCollapse(f"step collapsed at t = {t:.6g} (dt = {dt:.3g})")
        # growth loop: keep the last trial that passes
        while dt < remaining:
            cand = min(dt * p.growth, remaining)
            try:
                u_c, res_c = st.trial(f, cand)
            except PoleOnPath:
                break
            if res_c > p.eps:
                break
            dt, u_new, res = cand, u_c, res_c
        t = p.T if dt >= remaining else t + dt
        u = u_new
        n += 1
        prev_dt = dt
        trace.records.append(StepRecord(n, t, dt, res, u.copy()))


def fixed_step_integrate(
    model, space, ops, u0, plan, dt: float, T: float, m: int = 5, r: int = 2, s: int = 2, ng: int = 20,
    full_ops=None, residual_rows: str = "interior", residual_norm: str = "euclid", t0: float = 0.0,
) -> ContinuationTrace:
    """March with a fixed step, recomputing the terms from the current state each step.

    The residual is recorded at ``t0`` and at the end of every step. A
    non-finite state or a residual above ``EXPLOSION_LIMIT`` ends the run with
    reason ``ResidualExplosion``; a Pade pole on the integration path ends it
    with ``PoleOnPath``.
    """
    params = ContinuationParams(m=m, r=r, s=s, ng=ng, T=T, t0=t0, dt=dt, residual_rows=residual_rows, residual_norm=residual_norm)
    st = _Stepper(model, space, ops, plan, params, full_ops)
    u = np.asarray(u0, dtype=float).copy()
    trace = ContinuationTrace()
    tiny = 1e-12 * max(abs(T), 1.0)
    # overflow on the way to an explosion is an expected outcome, reported below
    with np.errstate(over="ignore", invalid="ignore"):
        return _march(st, u, trace, dt, T, t0, tiny)


def _march(st: _Stepper, u, trace: ContinuationTrace, dt: float, T: float, t0: float, tiny: float) -> ContinuationTrace:
    t = t0
    n = 0
    try:
        while True:
            if n > 0 and t >= T - tiny:
                trace.reason = "ReachedT"
                return trace
            terms = st.terms(u)
            f = st.evaluator(terms)
            if n == 0:
                _, du0 = f.state(0.0)
                trace.records.append(StepRecord(0, t, 0.0, st.residual(u, du0), u.copy()))
                if t >= T - tiny:
                    trace.reason = "ReachedT"
                    return trace
            h = min(dt, T - t)
            u, res = st.trial(f, h)
            n += 1
            t = t0 + n * dt if h == dt else T
            trace.records.append(StepRecord(n, t, h, res, u.copy()))
            if not math.isfinite(res) or res > EXPLOSION_LIMIT:
                trace.reason = "ResidualExplosion"
                return trace
    except NonFinite:
        trace.reason = "ResidualExplosion"
    except PoleOnPath:
        trace.reason = "PoleOnPath"
    return trace
