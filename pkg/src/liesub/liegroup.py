"""Bi-invariant geometry of compact matrix groups.

Everything is expressed in coordinates with respect to a fixed orthonormal
basis of the Lie algebra, using the real Frobenius inner product
``<A, B> = Re tr(A^H B)`` on matrix realizations.  Tangent vectors are
left-trivialized: a vector at ``g`` is stored as the algebra element ``x``
with ``v = g x``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

ORTHONORMAL_TOL = 1e-12
UNIT_TOL = 1e-10


class GroupMismatchError(ValueError):
    pass


class SkewExp:
    """Exponentials ``exp(t M)`` of a fixed skew-Hermitian (or real skew) matrix.

    The matrix is normal, so a single Hermitian eigendecomposition of ``iM``
    gives every ``exp(tM)`` with errors that stay at rounding level for large
    ``t``; squaring-and-scaling drifts there.
    """

    def __init__(self, M: np.ndarray):
        M = np.asarray(M)
        self.real = not np.iscomplexobj(M)
        w, U = np.linalg.eigh(1j * M)
        self.frequencies = w
        self.vectors = U

    def __call__(self, t: float) -> np.ndarray:
        U = self.vectors
        out = (U * np.exp(-1j * t * self.frequencies)) @ U.conj().T
        return out.real if self.real else out

    def many(self, ts: np.ndarray) -> np.ndarray:
        """Stack of ``exp(t M)`` for each ``t`` in ``ts``."""
        ts = np.asarray(ts, dtype=float)
        U = self.vectors
        phases = np.exp(-1j * ts[:, None] * self.frequencies[None, :])
        out = np.einsum("ij,tj,kj->tik", U, phases, U.conj())
        return out.real if self.real else out

    def apply_rows(self, ts: np.ndarray, rows: np.ndarray) -> np.ndarray:
        """Rows ``exp(t_k M) rows[k]``: a different vector at each time."""
        ts = np.asarray(ts, dtype=float)
        U = self.vectors
        c = rows @ U.conj()
        phases = np.exp(-1j * ts[:, None] * self.frequencies[None, :])
        out = (phases * c) @ U.T
        return out.real if self.real else out

    def apply(self, ts: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Rows ``exp(t M) v`` for each ``t``; cheaper than :meth:`many`."""
        ts = np.asarray(ts, dtype=float)
        U = self.vectors
        c = U.conj().T @ v
        phases = np.exp(-1j * ts[:, None] * self.frequencies[None, :])
        out = (phases * c[None, :]) @ U.T
        return out.real if self.real else out


def _su_basis(n: int) -> list[np.ndarray]:
    basis = []
    # Cartan part first so that su(2) gives (u1, u2, u3)/sqrt(2)
    for m in range(1, n):
        d = np.zeros(n)
        d[:m] = 1.0
        d[m] = -m
        basis.append(1j * np.diag(d) / np.sqrt(m * (m + 1)))
    for j in range(n):
        for k in range(j + 1, n):
            a = np.zeros((n, n), dtype=complex)
            a[j, k], a[k, j] = 1.0, -1.0
            basis.append(a / np.sqrt(2))
            b = np.zeros((n, n), dtype=complex)
            b[j, k] = b[k, j] = 1j
            basis.append(b / np.sqrt(2))
    return basis


def _so_basis(n: int) -> list[np.ndarray]:
    basis = []
    for j in range(n):
        for k in range(j + 1, n):
            a = np.zeros((n, n), dtype=complex)
            a[j, k], a[k, j] = 1.0, -1.0
            basis.append(a / np.sqrt(2))
    return basis


def _block_diag(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n, m = a.shape[-1], b.shape[-1]
    out = np.zeros(a.shape[:-2] + (n + m, n + m), dtype=complex)
    out[..., :n, :n] = a
    out[..., n:, n:] = b
    return out


@dataclass(frozen=True, eq=False)
class GroupSpec:
    """A compact matrix group together with an orthonormal algebra basis.

    Build instances with :func:`special_unitary`, :func:`special_orthogonal`
    or :func:`product`.  Products are block diagonal.
    """

    name: str
    family: str
    matrix_dim: int
    basis: np.ndarray  # (algebra_dim, matrix_dim, matrix_dim)
    factors: tuple["GroupSpec", ...] = field(default=())

    @property
    def algebra_dim(self) -> int:
        return self.basis.shape[0]

    @cached_property
    def structure_constants(self) -> np.ndarray:
        """``C[i, j, k] = <[b_i, b_j], b_k>``."""
        B = self.basis
        prod = np.einsum("iab,jbc->ijac", B, B)
        comm = prod - prod.transpose(1, 0, 2, 3)
        C = np.einsum("kab,ijab->ijk", B.conj(), comm).real
        C.setflags(write=False)
        return C

    # coordinate-level helpers; the heavy modules work with these directly

    def to_matrix(self, coords: np.ndarray) -> np.ndarray:
        return np.tensordot(np.asarray(coords, dtype=float), self.basis, axes=(-1, 0))

    def to_coords(self, M: np.ndarray) -> np.ndarray:
        return np.einsum("kab,...ab->...k", self.basis.conj(), M).real

    def bracket_coords(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.einsum("i,j,ijk->k", x, y, self.structure_constants)

    def ad_matrix(self, x: np.ndarray) -> np.ndarray:
        """Matrix of ``ad_x`` acting on coordinate column vectors."""
        return np.einsum("i,ijk->kj", x, self.structure_constants)

    def Ad_matrix(self, g: np.ndarray) -> np.ndarray:
        """Matrix of ``Ad_g`` acting on coordinate column vectors."""
        conj = np.einsum("ab,jbc,dc->jad", g, self.basis, g.conj())
        return self.to_coords(conj).T

    def Ad_coords(self, g: np.ndarray, x: np.ndarray) -> np.ndarray:
        return self.to_coords(g @ self.to_matrix(x) @ g.conj().T)

    def identity(self) -> "GroupElement":
        return GroupElement(self, np.eye(self.matrix_dim, dtype=complex))

    def element(self, coords: Sequence[float]) -> "AlgebraElement":
        return AlgebraElement(self, np.asarray(coords, dtype=float))

    def zero(self) -> "AlgebraElement":
        return AlgebraElement(self, np.zeros(self.algebra_dim))

    def basis_element(self, k: int) -> "AlgebraElement":
        c = np.zeros(self.algebra_dim)
        c[k] = 1.0
        return AlgebraElement(self, c)

    def from_matrix(self, M: np.ndarray) -> "AlgebraElement":
        return AlgebraElement(self, self.to_coords(np.asarray(M, dtype=complex)))

    def random_element(self, rng: np.random.Generator, unit: bool = False) -> "AlgebraElement":
        c = rng.standard_normal(self.algebra_dim)
        if unit:
            c /= np.linalg.norm(c)
        return AlgebraElement(self, c)

    def random_group_element(self, rng: np.random.Generator, scale: float = 3.0) -> "GroupElement":
        return exp_map(self.random_element(rng) * scale)

    def embed(self, index: int, x: "AlgebraElement") -> "AlgebraElement":
        """Include an element of factor ``index`` into this product algebra."""
        if not self.factors:
            raise GroupMismatchError(f"{self.name} is not a product")
        parts = [f.zero() for f in self.factors]
        parts[index] = x
        return self.pair(*parts)

    def pair(self, *parts: "AlgebraElement") -> "AlgebraElement":
        """Concatenate factor elements into an element of this product algebra."""
        if len(parts) != len(self.factors):
            raise GroupMismatchError(f"{self.name} has {len(self.factors)} factors")
        for f, p in zip(self.factors, parts):
            _check_same(f, p.group)
        return AlgebraElement(self, np.concatenate([p.coords for p in parts]))

    def split(self, x: "AlgebraElement") -> tuple["AlgebraElement", ...]:
        _check_same(self, x.group)
        out, k = [], 0
        for f in self.factors:
            out.append(AlgebraElement(f, x.coords[k:k + f.algebra_dim]))
            k += f.algebra_dim
        return tuple(out)

    def compatible(self, other: "GroupSpec") -> bool:
        return self is other or (self.name == other.name and self.algebra_dim == other.algebra_dim)

    def check(self) -> None:
        """Verify the basis invariants (orthonormal, skew, traceless)."""
        B = self.basis
        gram = np.einsum("iab,jab->ij", B.conj(), B).real
        if not np.allclose(gram, np.eye(self.algebra_dim), atol=ORTHONORMAL_TOL, rtol=0):
            raise ValueError(f"{self.name}: basis not orthonormal")
        if np.abs(B + B.conj().transpose(0, 2, 1)).max() > ORTHONORMAL_TOL:
            raise ValueError(f"{self.name}: basis not skew")
        if np.abs(np.trace(B, axis1=1, axis2=2)).max() > ORTHONORMAL_TOL:
            raise ValueError(f"{self.name}: basis not traceless")

    def __repr__(self) -> str:
        return f"GroupSpec({self.name})"


def special_unitary(n: int) -> GroupSpec:
    if n < 2:
        raise ValueError("SU(n) needs n >= 2")
    return GroupSpec(f"SU({n})", "special-unitary", n, np.array(_su_basis(n)))


def special_orthogonal(n: int) -> GroupSpec:
    if n < 2:
        raise ValueError("SO(n) needs n >= 2")
    return GroupSpec(f"SO({n})", "special-orthogonal", n, np.array(_so_basis(n)))


def product(a: GroupSpec, b: GroupSpec) -> GroupSpec:
    zb = np.zeros((a.algebra_dim, b.matrix_dim, b.matrix_dim))
    za = np.zeros((b.algebra_dim, a.matrix_dim, a.matrix_dim))
    basis = np.concatenate([_block_diag(a.basis, zb), _block_diag(za, b.basis)])
    return GroupSpec(f"{a.name}x{b.name}", "product", a.matrix_dim + b.matrix_dim, basis, (a, b))


def _check_same(a: GroupSpec, b: GroupSpec) -> None:
    if not a.compatible(b):
        raise GroupMismatchError(f"group mismatch: {a.name} vs {b.name}")


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    group: GroupSpec
    coords: np.ndarray

    def __post_init__(self):
        c = np.array(self.coords, dtype=float)
        if c.shape != (self.group.algebra_dim,):
            raise ValueError(f"expected {self.group.algebra_dim} coordinates, got shape {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @property
    def matrix(self) -> np.ndarray:
        return self.group.to_matrix(self.coords)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coords))

    def normalized(self) -> "AlgebraElement":
        return self / self.norm()

    def _other(self, other: "AlgebraElement") -> np.ndarray:
        _check_same(self.group, other.group)
        return other.coords

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        return AlgebraElement(self.group, self.coords + self._other(other))

    def __sub__(self, other: "AlgebraElement") -> "AlgebraElement":
        return AlgebraElement(self.group, self.coords - self._other(other))

    def __neg__(self) -> "AlgebraElement":
        return AlgebraElement(self.group, -self.coords)

    def __mul__(self, s: float) -> "AlgebraElement":
        return AlgebraElement(self.group, self.coords * float(s))

    __rmul__ = __mul__

    def __truediv__(self, s: float) -> "AlgebraElement":
        return AlgebraElement(self.group, self.coords / float(s))

    def __repr__(self) -> str:
        return f"AlgebraElement({self.group.name}, {np.array2string(self.coords, precision=6)})"


@dataclass(frozen=True, eq=False)
class GroupElement:
    group: GroupSpec
    matrix: np.ndarray

    def __post_init__(self):
        M = np.array(self.matrix, dtype=complex)
        if M.shape != (self.group.matrix_dim,) * 2:
            raise ValueError("matrix has wrong shape")
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        _check_same(self.group, other.group)
        return GroupElement(self.group, self.matrix @ other.matrix)

    def inverse(self) -> "GroupElement":
        return GroupElement(self.group, self.matrix.conj().T)

    def unitarity_residual(self) -> float:
        M = self.matrix
        return float(np.linalg.norm(M.conj().T @ M - np.eye(len(M))))

    def det_residual(self) -> float:
        """Distance of ``det`` from 1 on every simple block."""
        out, k = 0.0, 0
        for n in _block_sizes(self.group):
            out = max(out, abs(np.linalg.det(self.matrix[k:k + n, k:k + n]) - 1.0))
            k += n
        return float(out)


def _block_sizes(group: GroupSpec) -> list[int]:
    if not group.factors:
        return [group.matrix_dim]
    return [n for f in group.factors for n in _block_sizes(f)]


@dataclass(frozen=True, eq=False)
class TangentVector:
    base: GroupElement
    left_coord: AlgebraElement

    @property
    def right_coord(self) -> AlgebraElement:
        return Ad(self.base, self.left_coord)

    def norm(self) -> float:
        return self.left_coord.norm()


def bracket(X: AlgebraElement, Y: AlgebraElement) -> AlgebraElement:
    _check_same(X.group, Y.group)
    return AlgebraElement(X.group, X.group.bracket_coords(X.coords, Y.coords))


def inner(X: AlgebraElement, Y: AlgebraElement) -> float:
    _check_same(X.group, Y.group)
    return float(X.coords @ Y.coords)


def Ad(g: GroupElement, X: AlgebraElement) -> AlgebraElement:
    _check_same(g.group, X.group)
    return AlgebraElement(X.group, X.group.Ad_coords(g.matrix, X.coords))


def exp_map(X: AlgebraElement) -> GroupElement:
    return GroupElement(X.group, SkewExp(X.matrix)(1.0))


def geodesic(g: GroupElement, x: AlgebraElement, t: float) -> GroupElement:
    _check_same(g.group, x.group)
    return GroupElement(g.group, g.matrix @ SkewExp(x.matrix)(t))


def log_norm(g: GroupElement) -> float:
    """Frobenius norm of the principal matrix logarithm of a unitary ``g``."""
    w = np.linalg.eigvals(g.matrix)
    return float(np.sqrt(np.sum(np.angle(w) ** 2)))


def _require_unit(X: AlgebraElement) -> None:
    if abs(X.norm() - 1.0) > UNIT_TOL:
        raise ValueError(f"direction must be a unit vector, got norm {X.norm():.3g}")


def transport_operator(X: AlgebraElement) -> SkewExp:
    """``t -> Ad_{exp(-tX/2)}`` on coordinates, the parallel transport along ``exp(tX)``."""
    return SkewExp(-0.5 * X.group.ad_matrix(X.coords))


def parallel_transport(X: AlgebraElement, t: float, v: AlgebraElement) -> AlgebraElement:
    """Left-trivialized parallel transport of ``v`` along ``g exp(tX)``.

    The Levi-Civita connection of a bi-invariant metric is
    ``D_t y = y' + [X, y]/2`` in left coordinates, so parallel fields are
    ``Ad_{exp(-tX/2)} v``.
    """
    _require_unit(X)
    _check_same(X.group, v.group)
    return AlgebraElement(v.group, transport_operator(X)(t) @ v.coords)


def covariant_deriv_along_geodesic(X: AlgebraElement, ys: np.ndarray, dt: float) -> np.ndarray:
    """``D_t y`` at interior samples of a path given as rows of coordinates."""
    _require_unit(X)
    ys = np.asarray(ys, dtype=float)
    if ys.ndim != 2 or ys.shape[0] < 3:
        raise ValueError("need at least 3 samples")
    dy = (ys[2:] - ys[:-2]) / (2 * dt)
    ad = X.group.ad_matrix(X.coords)
    return dy + 0.5 * ys[1:-1] @ ad.T


def sectional_curvature(X: AlgebraElement, Y: AlgebraElement) -> float:
    _check_same(X.group, Y.group)
    gram = inner(X, X) * inner(Y, Y) - inner(X, Y) ** 2
    if gram <= 1e-14:
        raise ValueError("sectional curvature needs linearly independent vectors")
    return 0.25 * bracket(X, Y).norm() ** 2 / gram


def orthonormalize(cols: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis for the span of the columns; raises on rank deficiency."""
    Q, R = np.linalg.qr(cols)
    d = np.abs(np.diag(R)) if R.size else np.zeros(0)
    if np.any(d < tol * max(1.0, d.max(initial=0.0))):
        raise np.linalg.LinAlgError("columns are linearly dependent")
    return Q


def complement(Q: np.ndarray, dim: int) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of the columns of ``Q``."""
    if Q.shape[1] == 0:
        return np.eye(dim)
    U, _, _ = np.linalg.svd(Q, full_matrices=True)
    return U[:, Q.shape[1]:]


def principal_angles(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Principal angles between the column spans of orthonormal ``A`` and ``B``."""
    s = np.linalg.svd(A.T @ B, compute_uv=False)
    s = np.clip(s, -1.0, 1.0)
    # arccos loses half the digits near 0; use the sine form for small angles
    proj = B - A @ (A.T @ B)
    sines = np.linalg.svd(proj, compute_uv=False) if proj.size else np.zeros(0)
    angles = np.arccos(s)
    small = angles < 0.1
    if small.any() and sines.size == angles.size:
        angles[small] = np.arcsin(np.clip(np.sort(sines)[: small.sum()], 0, 1))
    return angles
