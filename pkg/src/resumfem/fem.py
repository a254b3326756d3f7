"""One-dimensional Lagrange finite elements of degree 1..5.

Uniform meshes of an interval, equispaced nodes inside each cell, global
numbering from left to right. Assembly produces the mass matrix M, the
stiffness matrix K and the rank-3 convection tensor D with entries
``D[i, j, l] = int phi_i * d(phi_j)/dx * phi_l``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import BadDegree, BadMesh
from .linalg import gauss_rule

MAX_DEGREE = 5


@dataclass(frozen=True)
class Mesh1D:
    a: float
    b: float
    n_cells: int

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)) or self.b <= self.a:
            raise BadMesh(f"need a < b, got [{self.a}, {self.b}]")
        if int(self.n_cells) != self.n_cells or self.n_cells < 2:
            raise BadMesh(f"need at least 2 cells, got {self.n_cells}")

    @property
    def h(self) -> float:
        return (self.b - self.a) / self.n_cells

    @property
    def length(self) -> float:
        return self.b - self.a


@dataclass(frozen=True)
class FemSpace:
    mesh: Mesh1D
    p: int
    node_coords: np.ndarray
    connectivity: np.ndarray  # (n_cells, p + 1) local -> global

    @property
    def h(self) -> float:
        return self.mesh.h

    @property
    def n_nodes(self) -> int:
        return len(self.node_coords)

    @property
    def boundary(self) -> np.ndarray:
        return np.array([0, self.n_nodes - 1])

    @property
    def interior(self) -> np.ndarray:
        return np.arange(1, self.n_nodes - 1)

    def basis(self, x) -> np.ndarray:
        """Values of all global basis functions at points ``x``, shape (len(x), n_nodes)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros((len(x), self.n_nodes))
        a, h = self.mesh.a, self.h
        cell = np.clip(((x - a) // h).astype(int), 0, self.mesh.n_cells - 1)
        ref = 2.0 * (x - (a + cell * h)) / h - 1.0
        V, _ = lagrange_local(self.p, ref)
        rows = np.repeat(np.arange(len(x)), self.p + 1)
        out[rows, self.connectivity[cell].ravel()] = V.ravel()
        return out

    def evaluate(self, values, x) -> np.ndarray:
        """Evaluate the finite-element function with nodal ``values`` at ``x``."""
        return self.basis(x) @ np.asarray(values, dtype=float)


def lagrange_local(p: int, x) -> tuple[np.ndarray, np.ndarray]:
    """Equispaced Lagrange basis on [-1, 1]: values and d/dx at points ``x``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    nodes = np.linspace(-1.0, 1.0, p + 1)
    V = np.ones((len(x), p + 1))
    D = np.zeros((len(x), p + 1))
    for i in range(p + 1):
        others = [j for j in range(p + 1) if j != i]
        denom = np.prod([nodes[i] - nodes[j] for j in others])
        V[:, i] = np.prod([x - nodes[j] for j in others], axis=0) / denom
        acc = np.zeros_like(x)
        for j in others:
            rest = [x - nodes[q] for q in others if q != j]
            acc += np.prod(rest, axis=0) if rest else 1.0
        D[:, i] = acc / denom
    return V, D


def build_space(a: float, b: float, n_cells: int, p: int) -> FemSpace:
    if int(p) != p or not 1 <= p <= MAX_DEGREE:
        raise BadDegree(f"degree must be in 1..{MAX_DEGREE}, got {p}")
    mesh = Mesh1D(float(a), float(b), int(n_cells))
    p = int(p)
    n_nodes = p * mesh.n_cells + 1
    coords = np.linspace(mesh.a, mesh.b, n_nodes)
    conn = p * np.arange(mesh.n_cells)[:, None] + np.arange(p + 1)[None, :]
    return FemSpace(mesh, p, coords, conn)


def interpolate(space: FemSpace, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    return np.asarray(f(space.node_coords), dtype=float)


@dataclass
class ConvectionTensor:
    """Rank-3 tensor stored as one local tensor per cell (uniform mesh).

    ``dofs`` selects the global nodes that make up the vector space the tensor
    acts on; after Dirichlet reduction it holds the interior nodes and the
    boundary values are treated as zero.
    """

    local: np.ndarray  # (p+1, p+1, p+1), same for every cell
    connectivity: np.ndarray
    n_global: int
    dofs: np.ndarray = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.dofs is None:
            self.dofs = np.arange(self.n_global)

    @property
    def size(self) -> int:
        return len(self.dofs)

    def restrict(self, dofs) -> "ConvectionTensor":
        return ConvectionTensor(self.local, self.connectivity, self.n_global, self.dofs[np.asarray(dofs)])

    def _lift(self, u) -> np.ndarray:
        full = np.zeros(self.n_global)
        full[self.dofs] = u
        return full

    def contract(self, u, w) -> np.ndarray:
        """Vector ``out[l] = sum_ij D[i, j, l] u[i] w[j]``."""
        U = self._lift(u)[self.connectivity]
        W = self._lift(w)[self.connectivity]
        loc = np.einsum("ijl,ci,cj->cl", self.local, U, W)
        out = np.zeros(self.n_global)
        np.add.at(out, self.connectivity, loc)
        return out[self.dofs]

    def _coo(self):
        n = self.n_global
        conn = self.connectivity
        I = conn[:, :, None, None]
        J = conn[:, None, :, None]
        L = conn[:, None, None, :]
        key = ((I * n + J) * n + L).ravel()
        vals = np.broadcast_to(self.local, (len(conn),) + self.local.shape).ravel()
        uniq, inv = np.unique(key, return_inverse=True)
        summed = np.bincount(inv, weights=vals)
        i, rem = np.divmod(uniq, n * n)
        j, l = np.divmod(rem, n)
        keep = np.isin(i, self.dofs) & np.isin(j, self.dofs) & np.isin(l, self.dofs)
        return i[keep], j[keep], l[keep], summed[keep]

    def dense(self) -> np.ndarray:
        pos = np.full(self.n_global, -1)
        pos[self.dofs] = np.arange(self.size)
        i, j, l, v = self._coo()
        out = np.zeros((self.size,) * 3)
        out[pos[i], pos[j], pos[l]] = v
        return out

    def frobenius(self) -> float:
        return float(np.sqrt(np.sum(self._coo()[3] ** 2)))

    def matrix_of(self, u) -> np.ndarray:
        """Matrix ``B[j, l] = sum_i D[i, j, l] u[i]``."""
        n = self.size
        B = np.zeros((n, n))
        for j in range(n):
            e = np.zeros(n)
            e[j] = 1.0
            B[j] = self.contract(u, e)
        return B


@dataclass
class Operators:
    M: np.ndarray
    K: np.ndarray
    D: ConvectionTensor | np.ndarray | None
    interior: np.ndarray
    boundary: np.ndarray
    reduced: bool = False
    space: FemSpace | None = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return self.M.shape[0]

    @classmethod
    def from_matrices(cls, M, K, D=None) -> "Operators":
        """Wrap user matrices (for instance a 1-dof ODE) with no boundary."""
        M = np.atleast_2d(np.asarray(M, dtype=float))
        K = np.atleast_2d(np.asarray(K, dtype=float))
        n = M.shape[0]
        return cls(M, K, None if D is None else np.asarray(D, dtype=float), np.arange(n), np.array([], dtype=int), True)

    def contract(self, u, w) -> np.ndarray:
        if self.D is None:
            return np.zeros(self.size)
        if isinstance(self.D, ConvectionTensor):
            return self.D.contract(u, w)
        return np.einsum("ijl,i,j->l", self.D, u, w)

    def dense_D(self) -> np.ndarray:
        if isinstance(self.D, ConvectionTensor):
            return self.D.dense()
        return np.asarray(self.D)

    def to_csv(self, path, which: str = "M") -> None:
        A = {"M": self.M, "K": self.K}[which]
        write_matrix_csv(path, A)


def quadrature_points(p: int) -> int:
    """Gauss-Legendre points per cell, exact for polynomial degree 3p."""
    return math.ceil((3 * p + 1) / 2)


def element_matrices(p: int, h: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    rule = gauss_rule("legendre", quadrature_points(p))
    V, dV = lagrange_local(p, rule.nodes)
    dx = dV * (2.0 / h)
    w = rule.weights * (h / 2.0)
    Me = (V * w[:, None]).T @ V
    Ke = (dx * w[:, None]).T @ dx
    De = np.einsum("q,qi,qj,ql->ijl", w, V, dx, V)
    return Me, Ke, De


def assemble(space: FemSpace) -> Operators:
    Me, Ke, De = element_matrices(space.p, space.h)
    n = space.n_nodes
    M = np.zeros((n, n))
    K = np.zeros((n, n))
    for idx in space.connectivity:
        ix = np.ix_(idx, idx)
        M[ix] += Me
        K[ix] += Ke
    D = ConvectionTensor(De, space.connectivity, n)
    return Operators(M, K, D, space.interior, space.boundary, False, space)


def lump_mass(space: FemSpace, method: str = "row_sum", ops: Operators | None = None) -> np.ndarray:
    """Diagonal mass matrix by row summation or Gauss-Lobatto quadrature."""
    n = space.n_nodes
    diag = np.zeros(n)
    if method == "row_sum":
        M = (ops if ops is not None else assemble(space)).M
        diag = M.sum(axis=1)
    elif method == "gauss_lobatto":
        # Integrate the element mass with p+1 Lobatto points. For p <= 2 the
        # Lobatto points coincide with the equispaced element nodes and the
        # result is diagonal; for p >= 3 they do not, and the quadrature mass
        # is diagonalized by summing its rows (total mass is unchanged).
        rule = gauss_rule("lobatto", space.p + 1)
        V, _ = lagrange_local(space.p, rule.nodes)
        local = (V * rule.weights[:, None]).T @ V * (space.h / 2.0)
        for idx in space.connectivity:
            diag[idx] += local.sum(axis=1)
    else:
        raise ValueError(f"unknown lumping method {method!r}")
    return np.diag(diag)


def reduce_dirichlet(ops: Operators, space: FemSpace | None = None) -> Operators:
    """Interior blocks of M, K and D (homogeneous Dirichlet data)."""
    if ops.reduced:
        return ops
    I = ops.interior
    ix = np.ix_(I, I)
    if isinstance(ops.D, ConvectionTensor):
        D = ops.D.restrict(I)
    elif ops.D is None:
        D = None
    else:
        D = ops.D[np.ix_(I, I, I)]
    return Operators(ops.M[ix].copy(), ops.K[ix].copy(), D, I, ops.boundary, True, space or ops.space)


def apply_dirichlet_rows(A, boundary: Sequence[int], mode: str = "rows", diag: float = 1.0) -> np.ndarray:
    """Impose Dirichlet rows on an assembled matrix.

    ``rows`` zeroes the boundary rows and puts ``diag`` on the diagonal,
    keeping the boundary columns (the usual row-replacement treatment of
    assembled systems). ``symmetric`` also zeroes the boundary columns.
    """
    A = np.array(A, dtype=float, copy=True)
    b = np.asarray(boundary, dtype=int)
    if mode not in ("rows", "symmetric"):
        raise ValueError(f"unknown mode {mode!r}")
    A[b, :] = 0.0
    if mode == "symmetric":
        A[:, b] = 0.0
    A[b, b] = diag
    return A


def write_matrix_csv(path, A) -> None:
    """Dense row-major CSV: header ``row,col,value`` then one line per entry."""
    A = np.asarray(A)
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row", "col", "value"])
        for i in range(A.shape[0]):
            for j in range(A.shape[1]):
                w.writerow([i, j, f"{A[i, j]:.17g}"])
