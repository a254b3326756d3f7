"""Time-series-expansion terms of semi-discrete heat and Burgers problems.

The terms ``u_k`` of ``u(t) = sum_k u_k t^k`` follow from the recurrence

    (M + alpha_k K) u_{k+1} = A_k(u_0, ..., u_k) / (k + 1)

where ``alpha_k = 0`` is the plain recurrence and ``alpha_k > 0`` adds the
artificial diffusion that keeps the computation stable for high-order
elements. This module also hosts the closed-form reference terms, the error
fits, the searches for ``alpha_0 = h**c`` and the ratio ``R`` and the
amplification and maximum-principle diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla

from .errors import DegenerateFit, NoDiffusion, NonFinite, OrderTooHigh, SingularMatrix
from .fem import ConvectionTensor, Operators, apply_dirichlet_rows
from .linalg import banded_gram_singular_values, cond2, singular_values

C_GRID = np.round(np.arange(1.50, 3.50 + 1e-9, 0.02), 2)
R_GRID = np.round(np.arange(1.0, 10.0 + 1e-9, 0.1), 1)
BANDED_THRESHOLD = 400


# --------------------------------------------------------------------------
# models


@dataclass(frozen=True)
class HeatModel:
    """``u_t = nu u_xx``; discrete right-hand side ``-nu K u``."""

    nu: float = 1.0
    name: str = "heat"

    def rhs(self, k: int, terms: Sequence[np.ndarray], ops: Operators) -> np.ndarray:
        return -self.nu * (ops.K @ terms[k])

    def semi_discrete_rhs(self, u, ops: Operators) -> np.ndarray:
        return -self.nu * (ops.K @ u)


@dataclass(frozen=True)
class BurgersModel:
    """``u_t + u u_x = nu u_xx``; convection through the rank-3 tensor D."""

    nu: float = 1.0
    name: str = "burgers"

    def rhs(self, k: int, terms: Sequence[np.ndarray], ops: Operators) -> np.ndarray:
        out = -self.nu * (ops.K @ terms[k]) if self.nu else np.zeros(ops.size)
        for r in range(k + 1):
            out = out - ops.contract(terms[r], terms[k - r])
        return out

    def semi_discrete_rhs(self, u, ops: Operators) -> np.ndarray:
        out = -self.nu * (ops.K @ u) if self.nu else np.zeros(ops.size)
        return out - ops.contract(u, u)


def make_model(name: str, nu: float = 1.0):
    if name == "heat":
        return HeatModel(nu)
    if name == "burgers":
        return BurgersModel(nu)
    raise ValueError(f"unknown model {name!r}")


# --------------------------------------------------------------------------
# stabilization plans


@dataclass(frozen=True)
class StabilizationPlan:
    mode: str = "none"
    alpha0: float = 0.0
    R: float = 1.0
    c: float | None = None
    h: float | None = None

    def __post_init__(self):
        if self.mode not in ("none", "constant", "doubling", "geometric"):
            raise ValueError(f"unknown stabilization mode {self.mode!r}")
        if self.alpha0 < 0 or self.R <= 0:
            raise ValueError("need alpha0 >= 0 and R > 0")
        if self.mode == "doubling" and (self.c is None or self.h is None):
            raise ValueError("doubling plan needs h and c")

    @classmethod
    def none(cls) -> "StabilizationPlan":
        return cls("none")

    @classmethod
    def constant(cls, alpha0: float) -> "StabilizationPlan":
        return cls("constant", alpha0)

    @classmethod
    def doubling(cls, h: float, c: float) -> "StabilizationPlan":
        return cls("doubling", h**c, 2.0**c, c, h)

    @classmethod
    def geometric(cls, alpha0: float, R: float) -> "StabilizationPlan":
        return cls("geometric", alpha0, R)

    def alpha(self, k: int) -> float:
        if self.mode == "none":
            return 0.0
        if self.mode == "constant":
            return self.alpha0
        if self.mode == "doubling":
            return (2.0**k * self.h) ** self.c
        return self.alpha0 * self.R**k

    def alphas(self, m: int) -> list[float]:
        return [self.alpha(k) for k in range(m)]


@dataclass
class SeriesTerms:
    terms: np.ndarray  # (m + 1, n)
    plan: StabilizationPlan
    model: object = None
    ops: Operators | None = field(default=None, repr=False)

    @property
    def m(self) -> int:
        return self.terms.shape[0] - 1

    def __getitem__(self, k: int) -> np.ndarray:
        return self.terms[k]

    def to_csv(self, path, x=None) -> None:
        from .io import write_rows

        n = self.terms.shape[1]
        x = np.arange(n) if x is None else np.asarray(x)
        rows = [(k, x[i], self.terms[k, i]) for k in range(self.m + 1) for i in range(n)]
        write_rows(path, ["k", "node_x", "u_k"], rows)


class TermSolver:
    """Solves ``(M + alpha K) x = b`` with one cached factorization per alpha."""

    def __init__(self, M, K):
        self.M = np.asarray(M, dtype=float)
        self.K = np.asarray(K, dtype=float)
        self._cache: dict[float, tuple[str, object]] = {}

    def _factor(self, alpha: float):
        if alpha in self._cache:
            return self._cache[alpha]
        A = self.M + alpha * self.K if alpha else self.M
        try:
            fac = ("cho", sla.cho_factor(A))
        except (np.linalg.LinAlgError, ValueError):
            lu, piv = sla.lu_factor(A, check_finite=False)
            d = np.abs(np.diag(lu))
            if d.max() == 0.0 or d.min() <= 1e-14 * d.max():
                raise SingularMatrix(f"M + {alpha:g} K is singular")
            fac = ("lu", (lu, piv))
        self._cache[alpha] = fac
        return fac

    def solve(self, alpha: float, b) -> np.ndarray:
        kind, fac = self._factor(float(alpha))
        if kind == "cho":
            return sla.cho_solve(fac, b, check_finite=False)
        return sla.lu_solve(fac, b, check_finite=False)


def compute_terms(
    model,
    space,
    ops: Operators,
    u0,
    m: int,
    plan: StabilizationPlan | None = None,
    solver: TermSolver | None = None,
) -> SeriesTerms:
    """Terms ``u_0..u_m`` of the stabilized recurrence on the reduced system.

    ``ops`` must already be Dirichlet-reduced (or a plain ODE system); ``space``
    is kept for reference only. A shared ``solver`` reuses factorizations
    across calls with the same plan.
    """
    if m < 1:
        raise ValueError("need m >= 1")
    plan = plan or StabilizationPlan.none()
    solver = solver or TermSolver(ops.M, ops.K)
    u0 = np.asarray(u0, dtype=float)
    if u0.shape != (ops.size,):
        raise ValueError(f"u0 has shape {u0.shape}, expected ({ops.size},)")
    terms = np.empty((m + 1, ops.size))
    terms[0] = u0
    for k in range(m):
        a = model.rhs(k, terms, ops)
        terms[k + 1] = solver.solve(plan.alpha(k), a / (k + 1))
        if not np.all(np.isfinite(terms[k + 1])):
            raise NonFinite(f"term u_{k + 1} is not finite", k=k + 1)
    return SeriesTerms(terms, plan, model, ops)


# --------------------------------------------------------------------------
# closed-form reference terms


def exact_heat_term(k: int, nu: float, x) -> np.ndarray:
    """``(-nu pi^2)^k / k! sin(pi x)``, the terms for ``u_0 = sin(pi x)``."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    x = np.asarray(x, dtype=float)
    return (-nu * math.pi**2) ** k / math.factorial(k) * np.sin(math.pi * x)


# Inviscid Burgers with u_0 = sin(2 pi x): u_k = (-pi)^k / k! sum_j c_j sin(2 j pi x).
_INVISCID = {
    0: {1: 1},
    1: {2: 1},
    2: {3: 3, 1: -1},
    3: {4: 16, 2: -8},
    4: {5: 125, 3: -81, 1: 2},
    5: {6: 1296, 4: -1024, 2: 80},
    6: {7: 16807, 5: -15625, 3: 2187, 1: -5},
}


def exact_inviscid_term(k: int, x) -> np.ndarray:
    if k < 0:
        raise ValueError("k must be nonnegative")
    if k > 6:
        raise OrderTooHigh(f"closed form only tabulated for k <= 6, got {k}")
    x = np.asarray(x, dtype=float)
    scale = (-math.pi) ** k / math.factorial(k)
    return scale * sum(c * np.sin(2 * j * math.pi * x) for j, c in _INVISCID[k].items())


@lru_cache(maxsize=32)
def _viscous_coefficients(nu: float, modes: int, kmax: int) -> np.ndarray:
    # Sine coefficients a[k, n] of u_k in the basis sin(n pi x), n = 1..modes.
    n = np.arange(1, modes + 1)
    a = np.zeros((kmax + 1, modes + 1))  # column 0 unused
    a[0, 2] = 1.0
    for k in range(kmax):
        nxt = -nu * (n * math.pi) ** 2 * a[k, 1:]
        conv = np.zeros(2 * modes + 1)
        for r in range(k + 1):
            ai = a[r, 1:]
            bj = a[k - r, 1:] * n * math.pi  # d/dx sin(j pi x) = j pi cos(j pi x)
            if not ai.any() or not bj.any():
                continue
            P = 0.5 * np.outer(ai, bj)  # sin(i) cos(j) = (sin(i+j) + sin(i-j)) / 2
            I, J = np.meshgrid(n, n, indexing="ij")
            np.add.at(conv, (I + J).ravel(), P.ravel())
            diff = (I - J).ravel()
            np.add.at(conv, np.abs(diff), (np.sign(diff) * P.ravel()))
        nxt = nxt - conv[1 : modes + 1]
        a[k + 1, 1:] = nxt / (k + 1)
    return a


def exact_viscous_term(k: int, nu: float, x, modes: int = 64) -> np.ndarray:
    """Burgers term ``u_k`` for ``u_0 = sin(2 pi x)`` by a sine-series recursion."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    if modes < 4 * (k + 1):
        raise ValueError(f"need at least {4 * (k + 1)} modes for k = {k}")
    a = _viscous_coefficients(float(nu), int(modes), int(k))[k]
    x = np.asarray(x, dtype=float)
    n = np.arange(1, modes + 1)
    return np.sin(np.pi * np.multiply.outer(x, n)) @ a[1:]


# --------------------------------------------------------------------------
# errors and slope fits


@dataclass
class ErrorReport:
    k: np.ndarray
    e: np.ndarray
    slope: float | None
    log10_C: float | None
    norm_kind: str
    relative: bool = False
    fit_range: tuple[int, int] | None = None

    def rows(self):
        with np.errstate(divide="ignore"):
            return [(int(k), float(e), float(np.log10(e)) if e > 0 else -np.inf) for k, e in zip(self.k, self.e)]

    def to_csv(self, path) -> None:
        from .io import write_rows

        write_rows(path, ["k", "e_k", "log10_e_k"], self.rows())


def vector_norm(v, M=None) -> float:
    v = np.asarray(v, dtype=float)
    if M is None:
        return float(np.linalg.norm(v))
    return float(math.sqrt(max(v @ (M @ v), 0.0)))


def fit_slope(k, e) -> tuple[float, float]:
    """Least-squares line through ``(k, log10 e)``; returns (slope, intercept)."""
    k = np.asarray(k, dtype=float)
    e = np.asarray(e, dtype=float)
    ok = np.isfinite(e) & (e > 0)
    if ok.sum() < 3:
        raise DegenerateFit(f"only {int(ok.sum())} finite positive points")
    slope, icpt = np.polyfit(k[ok], np.log10(e[ok]), 1)
    return float(slope), float(icpt)


@dataclass(frozen=True)
class TwoRegimeFit:
    breakpoint: int  # last k of the first regime
    slope_early: float
    slope_late: float | None


def fit_two_regime(k, e, jump: float = 1.5) -> TwoRegimeFit:
    """Split the log-error curve at the first increment larger than ``jump`` decades.

    The early regime is fitted over ``k <= breakpoint`` (two points suffice
    there) and the late regime over the remaining points.
    """
    k = np.asarray(k, dtype=int)
    le = np.log10(np.asarray(e, dtype=float))
    if len(k) < 3 or not np.all(np.isfinite(le)):
        raise DegenerateFit("two-regime fit needs at least 3 finite points")
    inc = np.diff(le)
    big = np.nonzero(inc > jump)[0]
    bk = int(k[big[0]]) if len(big) else int(k[-1])
    early = k <= bk
    if early.sum() < 2:
        raise DegenerateFit("early regime has fewer than 2 points")
    s1 = float(np.polyfit(k[early], le[early], 1)[0])
    late = ~early
    s2 = float(np.polyfit(k[late], le[late], 1)[0]) if late.sum() >= 2 else None
    return TwoRegimeFit(bk, s1, s2)


def error_report(
    terms: SeriesTerms,
    oracle: Callable[[int], np.ndarray],
    fit_range: tuple[int, int] | None = None,
    norm: str = "mass",
    relative: bool = False,
    M=None,
) -> ErrorReport:
    """Per-order errors ``e_k = ||u_k - u_k^h||`` and the log-linear fit.

    ``norm`` is ``mass`` (``sqrt(v^T M v)`` with the reduced mass matrix) or
    ``euclid``. ``fit_range`` is inclusive; without it no slope is fitted.
    """
    if norm == "mass":
        W = M if M is not None else terms.ops.M
    elif norm == "euclid":
        W = None
    else:
        raise ValueError(f"unknown norm {norm!r}")
    ks = np.arange(terms.m + 1)
    e = np.empty(len(ks))
    for k in ks:
        ref = np.asarray(oracle(int(k)), dtype=float)
        e[k] = vector_norm(terms[k] - ref, W)
        if relative:
            scale = vector_norm(ref, W)
            e[k] = e[k] / scale if scale > 0 else np.inf
    slope = icpt = None
    if fit_range is not None:
        lo, hi = fit_range
        sel = (ks >= lo) & (ks <= hi)
        slope, icpt = fit_slope(ks[sel], e[sel])
    return ErrorReport(ks, e, slope, icpt, norm, relative, fit_range)


# --------------------------------------------------------------------------
# choice of the stabilization coefficients


def _bandwidth(A: np.ndarray) -> int:
    nz = np.nonzero(A)
    return int(np.max(np.abs(nz[0] - nz[1]))) if len(nz[0]) else 0


def _prepare(A, boundary, bc: str):
    if boundary is not None and len(boundary):
        A = apply_dirichlet_rows(A, boundary, "rows" if bc == "rows" else "symmetric")
    return A


def _svals(A: np.ndarray, which: str) -> np.ndarray:
    n = A.shape[0]
    if n > BANDED_THRESHOLD:
        bw = _bandwidth(A)
        if bw < n // 8:
            return banded_gram_singular_values(A, bw, which)
    s = singular_values(A)
    return s if which == "all" else np.array([s[0], s[-1]])


@dataclass(frozen=True)
class AlphaChoice:
    c: float
    alpha0: float
    kappa: float
    grid: np.ndarray
    kappas: np.ndarray


def find_alpha0(M, K, h: float, c_grid=None, boundary=None, bc: str = "rows") -> AlphaChoice:
    """Grid search for ``c`` minimizing ``cond2(M + h**c K)``.

    With ``boundary`` given, the Dirichlet rows are imposed on the summed
    matrix before the condition number is taken (``bc="rows"`` keeps the
    boundary columns, ``bc="symmetric"`` removes them). Ties go to the
    smallest ``c``.
    """
    grid = C_GRID if c_grid is None else np.asarray(c_grid, dtype=float)
    M = np.asarray(M, dtype=float)
    K = np.asarray(K, dtype=float)
    kap = np.empty(len(grid))
    for i, c in enumerate(grid):
        s = _svals(_prepare(M + h**c * K, boundary, bc), "extremes")
        kap[i] = s[0] / s[-1] if s[-1] > 0 else np.inf
    i = int(np.argmin(kap))  # first occurrence = smallest c
    return AlphaChoice(float(grid[i]), float(h ** grid[i]), float(kap[i]), grid, kap)


@dataclass(frozen=True)
class RatioChoice:
    R: float
    objective: float
    grid: np.ndarray
    values: np.ndarray


def find_ratio(M, K, alpha0: float, r_grid=None, boundary=None, bc: str = "rows", inverse_norm: str = "fro") -> RatioChoice:
    """Grid search for ``R`` minimizing ``cond2(A) * ||A^-1||`` with ``A = M + R alpha0 K``.

    ``inverse_norm`` selects the norm of the inverse: ``fro`` (Frobenius) or
    ``2`` (spectral).
    """
    if alpha0 <= 0:
        raise ValueError("alpha0 must be positive")
    grid = R_GRID if r_grid is None else np.asarray(r_grid, dtype=float)
    M = np.asarray(M, dtype=float)
    K = np.asarray(K, dtype=float)
    vals = np.empty(len(grid))
    for i, r in enumerate(grid):
        A = _prepare(M + r * alpha0 * K, boundary, bc)
        if inverse_norm == "fro":
            s = _svals(A, "all")
            inv = math.sqrt(np.sum(s**-2.0))
        elif inverse_norm == "2":
            s = _svals(A, "extremes")
            inv = 1.0 / s[-1]
        else:
            raise ValueError(f"unknown norm {inverse_norm!r}")
        vals[i] = s[0] / s[-1] * inv
    i = int(np.argmin(vals))
    return RatioChoice(float(grid[i]), float(vals[i]), grid, vals)


def plan_for(mode: str, M, K, h: float, boundary=None, bc: str = "rows", c: float | None = None, R: float | None = None) -> StabilizationPlan:
    """Build a plan, searching ``c`` and ``R`` when they are not given."""
    if mode == "none":
        return StabilizationPlan.none()
    if c is None:
        c = find_alpha0(M, K, h, boundary=boundary, bc=bc).c
    if mode == "constant":
        return StabilizationPlan.constant(h**c)
    if mode == "doubling":
        return StabilizationPlan.doubling(h, c)
    if mode == "geometric":
        if R is None:
            R = find_ratio(M, K, h**c, boundary=boundary, bc=bc).R
        return StabilizationPlan.geometric(h**c, R)
    raise ValueError(f"unknown stabilization mode {mode!r}")


# --------------------------------------------------------------------------
# diagnostics


def amplification_factor(kind: str, M, K=None, D=None, nu: float = 1.0, boundary=None, bc: str = "rows") -> float:
    """``cond2(M) ||M||_F^-1 ||X||_F`` with ``X = nu K`` (heat) or ``X = D`` (Burgers).

    With ``boundary`` given, Dirichlet rows are imposed on M and K first; the
    convection tensor is used as passed.
    """
    M = _prepare(np.asarray(M, dtype=float), boundary, bc)
    base = cond2(M) / np.linalg.norm(M)
    if kind == "heat":
        if nu == 0:
            raise NoDiffusion("heat amplification factor with nu = 0 has log10 = -inf")
        K = _prepare(np.asarray(K, dtype=float), boundary, bc)
        return float(base * abs(nu) * np.linalg.norm(K))
    if kind == "burgers":
        if isinstance(D, ConvectionTensor):
            dn = D.frobenius()
        else:
            dn = float(np.linalg.norm(np.asarray(D, dtype=float)))
        return float(base * dn)
    raise ValueError(f"unknown kind {kind!r}")


def dmp_norm(M_in, K_in, nu: float, t: float, m: int) -> float:
    """Spectral norm of ``sum_{k<=m} (-nu t)^k / k! (M^-1 K)^k``."""
    M_in = np.asarray(M_in, dtype=float)
    n = M_in.shape[0]
    if t == 0 or nu == 0:
        return 1.0
    B = sla.solve(M_in, np.asarray(K_in, dtype=float))
    S = np.eye(n)
    P = np.eye(n)
    z = -nu * t
    for k in range(1, m + 1):
        P = (z / k) * (P @ B)
        S = S + P
    return float(singular_values(S)[0])


def dmp_threshold(M_in, K_in, nu: float, m: int, t_start: float = 1e-8, tol: float = 1e-10, rtol: float = 1e-6) -> float:
    """Largest ``t`` (to ``rtol``) before ``dmp_norm`` first exceeds 1.

    A doubling scan brackets the first violation, then bisection refines it.
    """
    if nu == 0:
        return math.inf
    ok = lambda t: dmp_norm(M_in, K_in, nu, t, m) <= 1.0 + tol
    lo, hi = 0.0, t_start
    while ok(hi):
        lo, hi = hi, 2.0 * hi
        if hi > 1e12:
            return math.inf
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if ok(mid) else (lo, mid)
    return lo

