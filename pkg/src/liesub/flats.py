"""Horizontal zero-curvature planes and the flat-projection checks.

A plane ``span{X, Y}`` has zero curvature in a bi-invariant metric iff
``[X, Y] = 0``.  The search minimizes ``|[X, Y]|^2`` over orthonormal pairs
in the horizontal space, a Stiefel manifold ``St(h, 2)`` in horizontal
coordinates.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .biquotient import BiquotientSpec, vertical_basis_fields, vertical_frame
from .liegroup import AlgebraElement, GroupElement, SkewExp, transport_operator
from .report import CheckReport

ACCEPT_TOL = 1e-10
POLISH_START = 1e-6
PART1_TOL = 1e-10
PART2_TOL = 1e-8
ORTHO_TOL = 1e-8
INITIAL_ORTHO_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class FlatCandidate:
    spec: BiquotientSpec
    base: GroupElement
    X: AlgebraElement
    Y: AlgebraElement
    commutator_norm: float
    search_seed: int
    restart: int = 0

    def invariant_residuals(self) -> dict[str, float]:
        frame = vertical_frame(self.spec, self.base)
        x, y = self.X.coords, self.Y.coords
        return {
            "unit_x": abs(np.linalg.norm(x) - 1.0),
            "unit_y": abs(np.linalg.norm(y) - 1.0),
            "inner_xy": abs(float(x @ y)),
            "vertical_x": frame.vertical_residual(x),
            "vertical_y": frame.vertical_residual(y),
            "commutator_mismatch": abs(
                np.linalg.norm(self.spec.group.bracket_coords(x, y)) - self.commutator_norm),
        }


@dataclass(frozen=True, eq=False)
class FlatSearch:
    candidate: FlatCandidate | None
    best_residual: float
    restarts_used: int
    best_by_restart: tuple[float, ...]
    horizontal_dim: int
    certified_lower_bound: float | None = None


def _horizontal_structure(spec: BiquotientSpec, Hb: np.ndarray) -> np.ndarray:
    """``C[p, q, k]``: coordinates of ``[h_p, h_q]`` for horizontal basis vectors."""
    return np.einsum("ip,jq,ijk->pqk", Hb, Hb, spec.group.structure_constants)


def _retract(W: np.ndarray) -> np.ndarray:
    Q, R = np.linalg.qr(W)
    return Q * np.sign(np.diag(R))[None, :]


class _Objective:
    def __init__(self, C: np.ndarray):
        self.C = C

    def residual(self, W: np.ndarray) -> np.ndarray:
        return np.einsum("p,q,pqk->k", W[:, 0], W[:, 1], self.C)

    def value(self, W: np.ndarray) -> float:
        z = self.residual(W)
        return float(z @ z)

    def jacobian(self, W: np.ndarray) -> np.ndarray:
        Ja = np.einsum("q,pqk->kp", W[:, 1], self.C)
        Jb = np.einsum("p,pqk->kq", W[:, 0], self.C)
        return np.hstack([Ja, Jb])

    def riemannian_gradient(self, W: np.ndarray) -> np.ndarray:
        z = self.residual(W)
        g = 2.0 * (self.jacobian(W).T @ z)
        h = W.shape[0]
        G = np.stack([g[:h], g[h:]], axis=1)
        S = W.T @ G
        return G - W @ (0.5 * (S + S.T))


def _descend(obj: _Objective, W: np.ndarray, max_iter: int) -> np.ndarray:
    f = obj.value(W)
    step = 1.0
    for _ in range(max_iter):
        if np.sqrt(f) < POLISH_START:
            break
        G = obj.riemannian_gradient(W)
        gn2 = float(np.sum(G * G))
        if gn2 < 1e-30:
            break
        while step > 1e-12:
            W_new = _retract(W - step * G)
            f_new = obj.value(W_new)
            if f_new <= f - 1e-4 * step * gn2:
                break
            step *= 0.5
        else:
            break
        W, f = W_new, f_new
        step = min(step * 2.0, 1e3)
    return W


def _polish(obj: _Objective, W: np.ndarray, max_iter: int = 100) -> np.ndarray:
    """Damped Gauss-Newton on the commutator residual, re-orthonormalizing each step.

    Re-orthonormalizing keeps the plane, and only rescales ``[X, Y]`` by the
    determinant of the change of basis, so it cannot undo progress.
    """
    f = obj.value(W)
    h = W.shape[0]
    for _ in range(max_iter):
        if f < 1e-32:
            break
        z = obj.residual(W)
        d, *_ = np.linalg.lstsq(obj.jacobian(W), -z, rcond=None)
        D = np.stack([d[:h], d[h:]], axis=1)
        step = 1.0
        while step > 1e-10:
            W_new = _retract(W + step * D)
            f_new = obj.value(W_new)
            if f_new < f:
                break
            step *= 0.5
        else:
            break
        W, f = W_new, f_new
    return W


def search_horizontal_flat(spec: BiquotientSpec, g: GroupElement, seed: int = 0,
                           restarts: int = 50, max_iter: int = 300) -> FlatSearch:
    """Projected descent from random orthonormal pairs, then Gauss-Newton.

    The gradient phase stops at ``max_iter`` even above ``POLISH_START``:
    near the commuting variety ``|[X, Y]|^2`` can be degenerate and gradient
    steps crawl, while Gauss-Newton still converges quadratically.
    Restart ``r`` draws from ``default_rng([seed, r])``, so results do not
    depend on how many restarts are allowed beyond the first success.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    Hb = vertical_frame(spec, g).horizontal_basis()
    h = Hb.shape[1]
    if h < 2:
        raise ValueError("horizontal dimension < 2: no planes to search")
    obj = _Objective(_horizontal_structure(spec, Hb))

    certified = None
    if h == 2:
        # exactly one horizontal plane; its commutator norm is basis independent
        certified = float(np.linalg.norm(obj.residual(np.eye(2))))

    best = np.inf
    history = []
    for r in range(restarts):
        rng = np.random.default_rng([seed, r])
        W = _retract(rng.standard_normal((h, 2)))
        W = _polish(obj, _descend(obj, W, max_iter))
        res = float(np.sqrt(obj.value(W)))
        best = min(best, res)
        history.append(best)
        if res < ACCEPT_TOL:
            X = AlgebraElement(spec.group, Hb @ W[:, 0])
            Y = AlgebraElement(spec.group, Hb @ W[:, 1])
            cand = FlatCandidate(spec, g, X, Y, float(np.linalg.norm(spec.group.bracket_coords(X.coords, Y.coords))),
                                 seed, r)
            return FlatSearch(cand, best, r + 1, tuple(history), h, certified)
    return FlatSearch(None, best, restarts, tuple(history), h, certified)


def find_horizontal_flat(spec: BiquotientSpec, g: GroupElement, seed: int = 0,
                         restarts: int = 50) -> FlatCandidate | None:
    return search_horizontal_flat(spec, g, seed, restarts).candidate


def verify_part1(spec: BiquotientSpec, candidate: FlatCandidate) -> CheckReport:
    """Curvature of the projected plane via ``K_B = K_G + 3 |A_X Y|^2``.

    ``A_X Y`` is half the vertical part of ``[X, Y]``.
    """
    x, y = candidate.X.coords, candidate.Y.coords
    br = spec.group.bracket_coords(x, y)
    gram = (x @ x) * (y @ y) - (x @ y) ** 2
    K_G = 0.25 * float(br @ br) / gram
    A = 0.5 * vertical_frame(spec, candidate.base).project(br)
    A_norm = float(np.linalg.norm(A))
    K_B = K_G + 3.0 * A_norm ** 2 / gram
    return CheckReport(
        "flat-part1", abs(K_B) < PART1_TOL,
        {"K_G": K_G, "A_XY_norm": A_norm, "K_B": K_B, "commutator_norm": float(np.linalg.norm(br))},
        {"K_B": PART1_TOL},
    )


def verify_part2(spec: BiquotientSpec, candidate: FlatCandidate, grid_half_width: float = 5.0,
                 grid_points: int = 10) -> CheckReport:
    """Horizontality of ``F = {g exp(sX + uY)}`` on a square grid."""
    if candidate.commutator_norm >= ACCEPT_TOL:
        raise ValueError(f"candidate does not commute (|[X,Y]| = {candidate.commutator_norm:.2e})")
    n = 2 * grid_points + 1
    s = np.linspace(-grid_half_width, grid_half_width, n)
    x, y = candidate.X.coords, candidate.Y.coords
    flow_x = SkewExp(candidate.X.matrix).many(s)
    flow_y = SkewExp(candidate.Y.matrix).many(s)
    residuals = np.zeros((n, n))
    for i in range(n):
        gx = candidate.base.matrix @ flow_x[i]
        for j in range(n):
            pt = GroupElement(spec.group, gx @ flow_y[j])
            frame = vertical_frame(spec, pt)
            residuals[i, j] = max(frame.vertical_residual(x), frame.vertical_residual(y))
    worst = float(residuals.max())
    return CheckReport(
        "flat-part2", worst < PART2_TOL,
        {"max_vertical_residual": worst, "grid_half_width": grid_half_width, "grid_size": n},
        {"max_vertical_residual": PART2_TOL},
        series={"grid_residuals": residuals},
    )


def holonomy_orthogonality(spec: BiquotientSpec, candidate: FlatCandidate, T: float = 100.0,
                           samples: int = 401, Y: AlgebraElement | None = None) -> CheckReport:
    """``<J(t), Y(t)>`` for holonomy fields of a vertical basis, ``Y(t)`` parallel.

    Passing ``Y`` replaces the candidate's second vector (negative controls).
    """
    y = candidate.Y.coords if Y is None else Y.coords
    X = candidate.X
    ts = np.linspace(0.0, T, samples)
    Yt = transport_operator(X).apply(ts, y)
    worst, initial = 0.0, 0.0
    for field in vertical_basis_fields(spec, candidate.base, X, basis="orthonormal"):
        J = field.route_b(ts)
        worst = max(worst, float(np.abs(np.einsum("ti,ti->t", J, Yt)).max()))
        initial = max(initial, abs(float(field.initial_derivative @ y)))
    passed = worst < ORTHO_TOL and initial < INITIAL_ORTHO_TOL
    return CheckReport(
        "flat-holonomy-orthogonality", passed,
        {"max_inner_JY": worst, "max_initial_inner": initial, "T": T, "samples": samples},
        {"max_inner_JY": ORTHO_TOL, "max_initial_inner": INITIAL_ORTHO_TOL},
    )
