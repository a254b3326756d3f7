"""Dense linear algebra helpers and Gaussian quadrature rules.

Everything here is a thin, checked layer over numpy/scipy. Matrices are plain
``numpy.ndarray`` objects; the functions validate finiteness and singularity and
raise the package exceptions instead of returning ``inf``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.special import eval_legendre, roots_jacobi, roots_laguerre, roots_legendre

from .errors import NonFinite, SingularMatrix, UnsupportedOrder

SINGULAR_RTOL = 1e-14
MAX_RULE_ORDER = 64


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD ``A = U diag(s) Vt`` with nonincreasing singular values."""

    singular_values: np.ndarray
    left_vectors: np.ndarray
    right_vectors: np.ndarray  # rows are the right singular vectors (Vt)

    def reconstruct(self) -> np.ndarray:
        return (self.left_vectors * self.singular_values) @ self.right_vectors


@dataclass(frozen=True)
class QuadratureRule:
    kind: str
    nodes: np.ndarray
    weights: np.ndarray

    def __len__(self) -> int:
        return len(self.nodes)

    def integrate(self, f) -> float:
        return float(np.dot(self.weights, f(self.nodes)))


def _as_finite(A, name: str = "matrix") -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if not np.all(np.isfinite(A)):
        raise NonFinite(f"{name} contains NaN or Inf")
    return A


def _as_square(A) -> np.ndarray:
    A = _as_finite(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise ValueError(f"expected a non-empty square matrix, got shape {A.shape}")
    return A


def singular_values(A) -> np.ndarray:
    """Singular values of ``A`` in nonincreasing order."""
    A = _as_finite(A)
    return np.linalg.svd(A, compute_uv=False)


def svd(A) -> SvdResult:
    A = _as_finite(A)
    if A.ndim != 2:
        raise ValueError("svd expects a 2-D array")
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    return SvdResult(s, U, Vt)


def _check_singular(s: np.ndarray) -> None:
    if s[0] == 0.0 or s[-1] <= SINGULAR_RTOL * s[0]:
        raise SingularMatrix(
            f"sigma_min/sigma_max = {s[-1] / s[0] if s[0] else 0.0:.3e} "
            f"<= {SINGULAR_RTOL:g}"
        )


def solve_dense(A, b) -> np.ndarray:
    """Solve ``A x = b`` with partial-pivoting LU after a singularity check."""
    A = _as_square(A)
    b = _as_finite(b, "right-hand side")
    _check_singular(singular_values(A))
    return sla.solve(A, b)


def cond2(A) -> float:
    """Spectral condition number sigma_max / sigma_min."""
    s = singular_values(_as_square(A))
    if s[-1] == 0.0:
        raise SingularMatrix("sigma_min = 0, condition number is infinite")
    return float(s[0] / s[-1])


def frobenius(A) -> float:
    A = _as_finite(A)
    scale = float(np.max(np.abs(A))) if A.size else 0.0
    if scale == 0.0:
        return 0.0
    # scaling avoids underflow/overflow of the squared entries
    return scale * float(np.linalg.norm(A / scale))


def op_norm(A) -> float:
    A = _as_finite(A)
    if not A.any():
        return 0.0
    return float(singular_values(A)[0])


def cond_fro(A) -> float:
    """Frobenius condition number ``||A||_F ||A^-1||_F``."""
    s = singular_values(_as_square(A))
    if s[-1] == 0.0:
        raise SingularMatrix("sigma_min = 0, condition number is infinite")
    return float(np.sqrt(np.sum(s**2)) * np.sqrt(np.sum(s**-2.0)))


def banded_gram_singular_values(A, bandwidth: int, which: str = "all") -> np.ndarray:
    """Singular values of a banded square matrix via its banded Gram matrix.

    ``A`` must have nonzeros only within ``bandwidth`` of the diagonal. The
    Gram matrix ``A^T A`` then has bandwidth ``2 * bandwidth`` and its
    eigenvalues are computed with LAPACK's banded symmetric solver. With
    ``which="extremes"`` only the largest and smallest values are returned
    (as a length-2 array, descending). Squaring the matrix limits the
    attainable relative accuracy of sigma_min to about ``eps * kappa**2``,
    which is harmless for the moderately conditioned FEM matrices scanned here.
    """
    import scipy.sparse as sp

    A = _as_square(A)
    n = A.shape[0]
    w = 2 * bandwidth
    offsets = list(range(-bandwidth, bandwidth + 1))
    S = sp.diags([np.diagonal(A, d) for d in offsets], offsets, shape=(n, n), format="csr")
    G = (S.T @ S).todia()
    ab = np.zeros((w + 1, n))
    for d in range(w + 1):
        ab[w - d, d:] = G.diagonal(d)
    if which == "extremes":
        lo = sla.eigvals_banded(ab, select="i", select_range=(0, 0))
        hi = sla.eigvals_banded(ab, select="i", select_range=(n - 1, n - 1))
        ev = np.array([hi[0], lo[0]])
    elif which == "all":
        ev = np.sort(sla.eigvals_banded(ab))[::-1]
    else:
        raise ValueError(f"unknown selection {which!r}")
    return np.sqrt(np.clip(ev, 0.0, None))


def gauss_rule(kind: str, n: int) -> QuadratureRule:
    """Gauss-Legendre, Gauss-Laguerre or Gauss-Lobatto rule with ``n`` points.

    Laguerre weights are normalized for the weight ``exp(-x)`` on (0, inf),
    so they sum to 1. Legendre and Lobatto rules live on [-1, 1].
    """
    n = int(n)
    if n > MAX_RULE_ORDER:
        raise UnsupportedOrder(f"{kind} rule with {n} > {MAX_RULE_ORDER} points")
    if kind == "legendre":
        if n < 1:
            raise UnsupportedOrder("legendre rule needs n >= 1")
        x, w = roots_legendre(n)
    elif kind == "laguerre":
        if n < 1:
            raise UnsupportedOrder("laguerre rule needs n >= 1")
        # scipy uses Golub-Welsch on the Jacobi matrix followed by Newton
        # polishing, which keeps the tiny tail weights accurate up to n = 64.
        x, w = roots_laguerre(n)
    elif kind == "lobatto":
        if n < 2:
            raise UnsupportedOrder("lobatto rule needs n >= 2")
        interior = roots_jacobi(n - 2, 1.0, 1.0)[0] if n > 2 else np.empty(0)
        x = np.concatenate(([-1.0], np.sort(interior), [1.0]))
        w = 2.0 / (n * (n - 1) * eval_legendre(n - 1, x) ** 2)
    else:
        raise ValueError(f"unknown quadrature kind {kind!r}")
    return QuadratureRule(kind, np.asarray(x, dtype=float), np.asarray(w, dtype=float))
