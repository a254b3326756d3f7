"""Borel-Pade-Laplace resummation of nodal time series.

Given terms ``u_0..u_m`` of ``u(t) = sum u_k t^k`` the numerical flow is

    Phi_t(u_0) = u_0 + t * sum_j P(xi_j t) w_j

where ``P`` is a pointwise Pade approximant of the Borel series
``sum_k u_{k+1} / k! xi^k`` and ``(xi_j, w_j)`` is a Gauss-Laguerre rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import toeplitz

from .errors import PoleOnPath, ZeroDerivative, ZeroHighestTerm
from .linalg import QuadratureRule, gauss_rule
from .series import SeriesTerms, vector_norm

PADE_RTOL = 1e-13
POLE_RTOL = 1e-10


def partial_sum_radius(terms, eps: float, M=None) -> float:
    """``(eps ||u_1|| / ||u_m||)**(1/(m-1))``, the radius where the partial sum is trusted."""
    T = terms.terms if isinstance(terms, SeriesTerms) else np.asarray(terms, dtype=float)
    m = T.shape[0] - 1
    if m < 2:
        raise ValueError("partial-sum radius needs m >= 2")
    n1 = vector_norm(T[1], M)
    nm = vector_norm(T[m], M)
    if nm <= 1e-300:
        raise ZeroHighestTerm(f"||u_{m}|| = {nm:g}")
    if n1 <= 0:
        raise ValueError("||u_1|| must be positive")
    return float((eps * n1 / nm) ** (1.0 / (m - 1)))


@dataclass(frozen=True)
class BorelSeries:
    coeffs: np.ndarray  # (m, n): b_k = u_{k+1} / k!

    @property
    def m(self) -> int:
        return self.coeffs.shape[0]


def borel(terms) -> BorelSeries:
    T = terms.terms if isinstance(terms, SeriesTerms) else np.asarray(terms, dtype=float)
    if T.ndim == 1:
        T = T[:, None]
    m = T.shape[0] - 1
    if m < 1:
        raise ValueError("need at least u_0 and u_1")
    fact = np.array([math.factorial(k) for k in range(m)], dtype=float)
    return BorelSeries(T[1:] / fact[:, None])


def borel_of_coefficients(coeffs) -> np.ndarray:
    """Borel image of a plain coefficient list ``a_k t^k`` (k >= 1): ``a_k / (k-1)!``."""
    a = np.asarray(coeffs, dtype=float)
    return np.array([a[k] / math.factorial(k - 1) for k in range(1, len(a))])


def laplace_of_coefficients(b) -> np.ndarray:
    """Formal inverse of :func:`borel_of_coefficients` (the ``t^0`` slot is zero)."""
    b = np.asarray(b, dtype=float)
    return np.concatenate(([0.0], [b[k] * math.factorial(k) for k in range(len(b))]))


# --------------------------------------------------------------------------
# Pade


def pade_scalar(c, r: int, s: int, tol: float = PADE_RTOL) -> tuple[np.ndarray, np.ndarray]:
    """Robust ``[r/s]`` Pade approximant of the series with coefficients ``c``.

    The denominator is the null vector of the Toeplitz block from an SVD.
    Numerical rank deficiency (a non-normal block of the Pade table) lowers
    ``s`` and ``r`` together, and leading or trailing negligible coefficients
    are removed. Returns ``(a, b)`` in ascending powers with ``b[0] = 1``.
    """
    c = np.asarray(c, dtype=float)
    if len(c) < r + s + 1:
        raise ValueError(f"need {r + s + 1} coefficients, got {len(c)}")
    c = c[: r + s + 1]
    cnorm = np.linalg.norm(c)
    ts = tol * cnorm
    if cnorm <= 1e-300:
        return np.zeros(1), np.ones(1)
    while True:
        if s == 0:
            a = c[: r + 1].copy()
            return _trim_num(a, tol), np.ones(1)
        Z = toeplitz(c[: r + s + 1], np.r_[c[0], np.zeros(s)])
        C = Z[r + 1 : r + s + 1, :]
        sv = np.linalg.svd(C, compute_uv=False)
        rho = int(np.sum(sv > ts))
        if rho == s:
            break
        r -= s - rho
        s = rho
        if r < 0:
            return np.zeros(1), np.ones(1)
    b = np.linalg.svd(C)[2][-1]
    a = Z[: r + 1, :] @ b
    return _normalize(a, b, tol)


def _trim_num(a, tol):
    # trailing numerator coefficients negligible against the largest one
    scale = np.max(np.abs(a)) if len(a) else 0.0
    nz = np.nonzero(np.abs(a) > tol * scale)[0]
    return a[: nz[-1] + 1] if scale > 0 and len(nz) else np.zeros(1)


def _normalize(a, b, tol):
    lead = int(np.argmax(np.abs(b) > tol))
    b = b[lead:]
    a = a[lead:] if lead < len(a) else np.zeros(1)
    last = len(b) - 1 - int(np.argmax(np.abs(b[::-1]) > tol))
    b = b[: last + 1]
    return _trim_num(a / b[0], tol), b / b[0]


@dataclass
class PadeSet:
    """Per-node rational functions, coefficients in ascending powers (zero padded)."""

    num: np.ndarray  # (n, r + 1)
    den: np.ndarray  # (n, s + 1), den[:, 0] == 1
    r_eff: np.ndarray
    s_eff: np.ndarray

    @property
    def size(self) -> int:
        return self.num.shape[0]

    def evaluate(self, z) -> np.ndarray:
        """Values ``P_i(z)`` for every node; ``z`` broadcast against nodes."""
        P, Q = _horner(self.num, z), _horner(self.den, z)
        return P / Q

    def to_csv(self, path) -> None:
        from .io import write_rows

        r, s = self.num.shape[1] - 1, self.den.shape[1] - 1
        header = ["node"] + [f"a{i}" for i in range(r + 1)] + [f"b{i}" for i in range(s + 1)]
        write_rows(path, header, [[i, *self.num[i], *self.den[i]] for i in range(self.size)])


def _horner(coef: np.ndarray, z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    out = np.zeros((coef.shape[0],) + z.shape)
    for j in range(coef.shape[1] - 1, -1, -1):
        out = out * z + coef[:, j].reshape((-1,) + (1,) * z.ndim)
    return out


def _dcoef(coef: np.ndarray) -> np.ndarray:
    if coef.shape[1] == 1:
        return np.zeros_like(coef)
    return coef[:, 1:] * np.arange(1, coef.shape[1])


def pade(coeffs, r: int, s: int, tol: float = PADE_RTOL) -> PadeSet:
    """Pointwise Pade approximants for every column of ``coeffs`` (shape (m, n)).

    Nodes whose Toeplitz block has full rank and a well-scaled denominator are
    handled with one batched SVD; all others go through :func:`pade_scalar`.
    """
    if isinstance(coeffs, BorelSeries):
        coeffs = coeffs.coeffs
    c = np.asarray(coeffs, dtype=float)
    if c.ndim == 1:
        c = c[:, None]
    if c.shape[0] < r + s + 1:
        raise ValueError(f"need {r + s + 1} coefficients, got {c.shape[0]}")
    c = c[: r + s + 1].T  # (n, L)
    n = c.shape[0]
    num = np.zeros((n, r + 1))
    den = np.zeros((n, s + 1))
    den[:, 0] = 1.0
    r_eff = np.zeros(n, dtype=int)
    s_eff = np.zeros(n, dtype=int)
    done = np.zeros(n, dtype=bool)

    cnorm = np.linalg.norm(c, axis=1)
    done |= cnorm <= 1e-300
    if s > 0:
        idx = np.nonzero(~done)[0]
        if len(idx):
            # rows r+1..r+s of the Toeplitz matrix, columns 0..s
            rows = np.arange(r + 1, r + s + 1)[:, None] - np.arange(s + 1)[None, :]
            C = np.where(rows >= 0, c[idx][:, np.clip(rows, 0, None)], 0.0)
            _, sv, Vt = np.linalg.svd(C)
            ts = tol * cnorm[idx]
            full = np.all(sv > ts[:, None], axis=1)
            b = Vt[:, -1, :]
            good = full & (np.abs(b[:, 0]) > tol) & (np.abs(b[:, -1]) > tol)
            gi = idx[good]
            b = b[good]
            toe = np.arange(r + 1)[:, None] - np.arange(s + 1)[None, :]
            Za = np.where(toe >= 0, c[gi][:, np.clip(toe, 0, None)], 0.0)
            a = np.einsum("nij,nj->ni", Za, b)
            # drop trailing negligible numerator coefficients, as in the scalar path
            a = a / b[:, :1]
            amax = np.max(np.abs(a), axis=1, keepdims=True)
            big = np.abs(a) > tol * amax
            last = np.where(big.any(axis=1), r - np.argmax(big[:, ::-1], axis=1), -1)
            a = np.where(np.arange(r + 1)[None, :] <= last[:, None], a, 0.0)
            num[gi] = a
            den[gi] = b / b[:, :1]
            s_eff[gi] = s
            r_eff[gi] = _last_nonzero(num[gi])
            done[gi] = True
    for i in np.nonzero(~done)[0]:
        a, b = pade_scalar(c[i], r, s, tol)
        num[i, : len(a)] = a
        den[i, : len(b)] = b
        r_eff[i] = _last_nonzero(a[None, :])[0]
        s_eff[i] = len(b) - 1
    return PadeSet(num, den, r_eff, s_eff)


def _last_nonzero(a: np.ndarray) -> np.ndarray:
    nz = a != 0
    has = nz.any(axis=1)
    last = a.shape[1] - 1 - np.argmax(nz[:, ::-1], axis=1)
    return np.where(has, last, 0)


# --------------------------------------------------------------------------
# Laplace step


class FlowEvaluator:
    """Numerical flow ``Phi_t`` built from one set of series terms."""

    def __init__(self, u0, pade_set: PadeSet, rule: QuadratureRule | int = 20):
        self.u0 = np.asarray(u0, dtype=float)
        self.pade = pade_set
        self.rule = rule if isinstance(rule, QuadratureRule) else gauss_rule("laguerre", int(rule))
        if self.rule.kind != "laguerre":
            raise ValueError("the Laplace integral needs a Gauss-Laguerre rule")
        self._dnum = _dcoef(pade_set.num)
        self._dden = _dcoef(pade_set.den)

    @classmethod
    def from_terms(cls, terms, r: int, s: int, ng: int = 20) -> "FlowEvaluator":
        T = terms.terms if isinstance(terms, SeriesTerms) else np.asarray(terms, dtype=float)
        return cls(T[0], pade(borel(T).coeffs, r, s), gauss_rule("laguerre", ng))

    def _eval(self, t: float):
        z = self.rule.nodes * t
        P = _horner(self.pade.num, z)
        Q = _horner(self.pade.den, z)
        scale = _horner(np.abs(self.pade.den), np.abs(z))
        bad = np.abs(Q) < POLE_RTOL * scale
        if bad.any():
            i, j = np.argwhere(bad)[0]
            raise PoleOnPath(f"denominator of node {i} vanishes near xi*t = {z[j]:.6g}")
        return z, P, Q

    def flow(self, t: float) -> np.ndarray:
        if t < 0:
            raise ValueError("t must be nonnegative")
        if t == 0:
            return self.u0.copy()
        _, P, Q = self._eval(t)
        return self.u0 + t * ((P / Q) @ self.rule.weights)

    def flow_derivative(self, t: float) -> np.ndarray:
        """``sum_j [P(xi_j t) + t xi_j P'(xi_j t)] w_j``, the exact time derivative."""
        return self.state(t)[1]

    def state(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        """Flow value and derivative at ``t`` (one pole check)."""
        if t < 0:
            raise ValueError("t must be nonnegative")
        z, P, Q = self._eval(t)
        dP = _horner(self._dnum, z)
        dQ = _horner(self._dden, z)
        R = P / Q
        dR = (dP * Q - P * dQ) / Q**2
        w = self.rule.weights
        return self.u0 + t * (R @ w), (R + z[None, :] * dR) @ w


def flow(f: FlowEvaluator, t: float) -> np.ndarray:
    return f.flow(t)


def flow_derivative(f: FlowEvaluator, t: float) -> np.ndarray:
    return f.flow_derivative(t)


# --------------------------------------------------------------------------
# residual


def residual(model, ops, u, dudt, norm: str = "euclid", full_ops=None) -> float:
    """Relative defect ``||M du/dt - A(u)|| / ||du/dt||`` of the semi-discrete system.

    With ``full_ops`` (the unreduced operators) the state is extended by the
    zero Dirichlet values and every row of the assembled system, boundary
    rows included, enters the defect. ``norm="mass"`` weights both vectors
    with the mass matrix in use.
    """
    u = np.asarray(u, dtype=float)
    dudt = np.asarray(dudt, dtype=float)
    if full_ops is not None:
        U = np.zeros(full_ops.size)
        V = np.zeros(full_ops.size)
        U[full_ops.interior] = u
        V[full_ops.interior] = dudt
        u, dudt, ops = U, V, full_ops
    W = ops.M if norm == "mass" else None
    if norm not in ("mass", "euclid"):
        raise ValueError(f"unknown norm {norm!r}")
    defect = ops.M @ dudt - model.semi_discrete_rhs(u, ops)
    if np.linalg.norm(ops.M @ dudt) <= 1e-300:
        raise ZeroDerivative("du/dt vanishes", absolute=vector_norm(defect, W))
    return vector_norm(defect, W) / vector_norm(dudt, W)
