"""Jacobi fields along geodesics of a bi-invariant metric.

Along ``gamma(t) = g exp(tX)`` with ``|X| = 1`` the algebra splits into
eigenspaces ``V_i`` of ``(ad_X)^2`` with eigenvalues ``0 = l_0 > l_1 > ...``.
The plane ``span{X, v}`` with ``v`` in ``V_i`` has curvature ``k_i = -l_i/4``
and every Jacobi field is, in a parallel frame,

    J(t) = E_0 + t F_0 + sum_i cos(sqrt(k_i) t) E_i + sin(sqrt(k_i) t) F_i

with ``E_i, F_i`` in ``V_i``.  The curvature operator is fixed as
``R(J, X)X = -(ad_X)^2 J / 4``, which is the sign that makes ``k_i = -l_i/4``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .liegroup import AlgebraElement, _check_same, _require_unit, transport_operator

CLUSTER_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class AdSquaredDecomposition:
    X: AlgebraElement
    eigenvalues: np.ndarray  # 0 first, strictly decreasing
    eigenspaces: tuple[np.ndarray, ...]  # orthonormal columns per eigenvalue
    clustering_tolerance: float = CLUSTER_TOL

    @property
    def curvatures(self) -> np.ndarray:
        return -self.eigenvalues / 4.0

    @property
    def frequencies(self) -> np.ndarray:
        return np.sqrt(np.maximum(self.curvatures, 0.0))

    def projector(self, i: int) -> np.ndarray:
        V = self.eigenspaces[i]
        return V @ V.T

    def project(self, i: int, v: np.ndarray) -> np.ndarray:
        V = self.eigenspaces[i]
        return V @ (V.T @ v)

    def reconstruct(self) -> np.ndarray:
        return sum(lam * self.projector(i) for i, lam in enumerate(self.eigenvalues))

    @property
    def is_regular(self) -> bool:
        """True when ``V_0`` has the rank of a maximal torus, i.e. is abelian."""
        V0 = self.eigenspaces[0]
        g = self.X.group
        br = np.einsum("ai,bj,abk->ijk", V0, V0, g.structure_constants)
        return bool(np.abs(br).max(initial=0.0) < 1e-9)


def ad_squared(X: AlgebraElement) -> np.ndarray:
    ad = X.group.ad_matrix(X.coords)
    return ad @ ad


def decompose(X: AlgebraElement, tol: float = CLUSTER_TOL) -> AdSquaredDecomposition:
    _require_unit(X)
    A = ad_squared(X)
    A = 0.5 * (A + A.T)
    w, U = np.linalg.eigh(A)
    order = np.argsort(-w, kind="stable")
    w, U = w[order], U[:, order]

    groups: list[list[int]] = []
    for k, lam in enumerate(w):
        if groups:
            ref = w[groups[-1][0]]
            if abs(lam - ref) <= tol * max(1.0, abs(ref)):
                groups[-1].append(k)
                continue
        groups.append([k])

    if abs(w[groups[0][0]]) > tol:
        raise ArithmeticError("(ad_X)^2 has no kernel; X is not in its own centralizer?")

    eigenvalues = np.array([0.0] + [float(np.mean(w[g])) for g in groups[1:]])
    spaces = tuple(U[:, g] for g in groups)
    return AdSquaredDecomposition(X, eigenvalues, spaces, tol)


@dataclass(frozen=True, eq=False)
class ClosedFormJacobiField:
    decomposition: AdSquaredDecomposition
    E: tuple[np.ndarray, ...]
    F: tuple[np.ndarray, ...]

    @property
    def X(self) -> AlgebraElement:
        return self.decomposition.X

    @property
    def group(self):
        return self.X.group

    def frame_coefficients(self, ts: np.ndarray) -> np.ndarray:
        """Field in the parallel frame (rows), before transport to ``gamma(t)``."""
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        out = self.E[0][None, :] + ts[:, None] * self.F[0][None, :]
        for w, E, F in zip(self.decomposition.frequencies[1:], self.E[1:], self.F[1:]):
            out = out + np.cos(w * ts)[:, None] * E + np.sin(w * ts)[:, None] * F
        return out

    def evaluate_many(self, ts: np.ndarray) -> np.ndarray:
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        return transport_operator(self.X).apply_rows(ts, self.frame_coefficients(ts))

    def derivative_at_zero(self) -> np.ndarray:
        return self.F[0] + sum(w * F for w, F in zip(self.decomposition.frequencies[1:], self.F[1:]))

    def value_at_zero(self) -> np.ndarray:
        return sum(self.E)

    @property
    def F0(self) -> np.ndarray:
        return self.F[0]


def jacobi_from_initial(X: AlgebraElement, J0: AlgebraElement, J0p: AlgebraElement,
                        decomposition: AdSquaredDecomposition | None = None) -> ClosedFormJacobiField:
    """The unique Jacobi field with ``J(0) = J0`` and covariant ``J'(0) = J0p``."""
    _check_same(X.group, J0.group)
    _check_same(X.group, J0p.group)
    dec = decomposition if decomposition is not None else decompose(X)
    E = tuple(dec.project(i, J0.coords) for i in range(len(dec.eigenvalues)))
    F = [dec.project(0, J0p.coords)]
    for i, w in enumerate(dec.frequencies[1:], start=1):
        F.append(dec.project(i, J0p.coords) / w)
    return ClosedFormJacobiField(dec, E, tuple(F))


def evaluate(field: ClosedFormJacobiField, t: float) -> AlgebraElement:
    return AlgebraElement(field.group, field.evaluate_many(np.array([t]))[0])


def jacobi_ode_oracle(X: AlgebraElement, J0: AlgebraElement, J0p: AlgebraElement,
                      t: float, steps: int = 1000) -> AlgebraElement:
    """Integrate the Jacobi equation with classical RK4 in left coordinates.

    State is ``(j, p)`` with ``p = D_t j``; then ``j' = p - ad_X j / 2`` and
    ``p' = -ad_X p / 2 - R(j, X)X = -ad_X p / 2 + (ad_X)^2 j / 4``.
    Uses no eigendecomposition, so it is independent of the closed form.
    """
    _, traj = jacobi_ode_trajectory(X, J0, J0p, t, steps)
    return AlgebraElement(X.group, traj[-1])


def jacobi_ode_trajectory(X: AlgebraElement, J0: AlgebraElement, J0p: AlgebraElement,
                          t: float, steps: int = 1000) -> tuple[np.ndarray, np.ndarray]:
    """Like :func:`jacobi_ode_oracle` but returns every step: ``(ts, rows of j)``."""
    if steps < 100:
        raise ValueError("steps must be >= 100")
    _require_unit(X)
    ad = X.group.ad_matrix(X.coords)
    d = ad.shape[0]
    M = np.zeros((2 * d, 2 * d))
    M[:d, :d] = -0.5 * ad
    M[:d, d:] = np.eye(d)
    M[d:, :d] = 0.25 * ad @ ad
    M[d:, d:] = -0.5 * ad
    h = t / steps
    # for a constant linear system one RK4 step is exactly the quartic Taylor polynomial of hM
    A = h * M
    A2 = A @ A
    step = np.eye(2 * d) + A + A2 / 2 + A2 @ A / 6 + A2 @ A2 / 24
    y = np.concatenate([J0.coords, J0p.coords])
    out = np.empty((steps + 1, d))
    out[0] = y[:d]
    for n in range(steps):
        y = step @ y
        out[n + 1] = y[:d]
    return np.linspace(0.0, t, steps + 1), out
