"""Boundedness certificates for holonomy Jacobi fields.

The finite observables are: the ``V_0`` component ``F_0`` of ``J'(0)``
(zero iff ``|J|`` stays bounded), the late-time slope of ``|J(t)|``, and the
subspace ``Omega`` of vertical vectors whose holonomy fields are parallel,
together with its return along recurrence times of the geodesic.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .biquotient import (
    BiquotientSpec,
    HolonomyJacobiField,
    action_matrix,
    initial_covariant_derivative,
    vertical_basis_fields,
    vertical_frame,
)
from .jacobi import ClosedFormJacobiField, decompose, jacobi_from_initial
from .liegroup import (
    AlgebraElement,
    GroupElement,
    SkewExp,
    complement,
    principal_angles,
    transport_operator,
)
from .report import CheckReport

KERNEL_TOL = 1e-9
F0_TOL = 1e-9
SLOPE_TOL = 1e-6
SUP_FACTOR = 1.01
OMEGA_PERP_TOL = 1e-10
RETURN_FACTOR = 10.0


@dataclass(frozen=True, eq=False)
class OmegaSubspace:
    spec: BiquotientSpec
    base: GroupElement
    X: AlgebraElement
    basis: np.ndarray  # orthonormal vertical columns
    bracket_residual: float
    derivative_residual: float

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    def perp(self) -> np.ndarray:
        """Orthonormal basis of the complement of Omega inside the vertical space."""
        V = vertical_frame(self.spec, self.base).basis
        if self.rank == 0:
            return V
        C = complement(V.T @ self.basis, V.shape[1])
        return V @ C


def derivative_operator(spec: BiquotientSpec, g: GroupElement, X: AlgebraElement) -> np.ndarray:
    """Matrix of ``v -> J'(0; v)`` on vertical vectors at ``g`` (zero off the vertical space)."""
    K = action_matrix(spec, g)
    pinv = np.linalg.pinv(K)
    cols = [initial_covariant_derivative(spec, g, X, c) for c in pinv.T]
    return np.array(cols).T


def omega_subspace(spec: BiquotientSpec, g: GroupElement, X: AlgebraElement) -> OmegaSubspace:
    """Kernel of ``v -> ([X, v], J'(0; v))`` restricted to the vertical space."""
    V = vertical_frame(spec, g).basis
    ad = spec.group.ad_matrix(X.coords)
    D = derivative_operator(spec, g, X)
    M = np.vstack([ad @ V, D @ V])
    _, s, Vt = np.linalg.svd(M)
    s_full = np.zeros(V.shape[1])
    s_full[: len(s)] = s
    kernel = Vt[s_full < KERNEL_TOL].T
    basis = V @ kernel
    br = float(np.abs(ad @ basis).max(initial=0.0))
    dr = float(np.abs(D @ basis).max(initial=0.0))
    return OmegaSubspace(spec, g, X, basis, br, dr)


# recurrence of exp(tX) to the identity

@dataclass(frozen=True, eq=False)
class RecurrenceSequence:
    X: AlgebraElement
    epsilon: float
    times: np.ndarray
    residuals: np.ndarray

    def __len__(self) -> int:
        return len(self.times)


class _IdentityDistance:
    """``r(t) = |exp(tX) - I|`` (Frobenius) from the eigenfrequencies of ``X``."""

    def __init__(self, X: AlgebraElement):
        self.w = SkewExp(X.matrix).frequencies
        self.lipschitz = float(np.sqrt(np.sum(self.w ** 2)))

    def squared(self, t: float) -> float:
        return float(np.sum(2.0 - 2.0 * np.cos(t * self.w)))

    def __call__(self, t: float) -> float:
        return float(np.sqrt(max(self.squared(t), 0.0)))

    def slope_squared(self, t: float) -> float:
        return float(np.sum(2.0 * self.w * np.sin(t * self.w)))


def recurrence_times(X: AlgebraElement, epsilon: float, t_max: float, step: float | None = None) -> RecurrenceSequence:
    """Local minima of ``|exp(tX) - I|`` below ``epsilon`` on ``(0, t_max]``.

    ``r`` is ``|X|``-Lipschitz, so from a point with ``r > 2 epsilon`` the scan
    may jump ahead by ``(r - epsilon)/|X|`` without skipping any sub-epsilon
    value.  Close to the identity it walks with ``step`` until ``d(r^2)/dt``
    changes sign and bisects the bracket.
    """
    if t_max <= 0:
        raise ValueError("t_max must be positive")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    step = epsilon / 2 if step is None else step
    if step > epsilon / 2 + 1e-15:
        raise ValueError("step must be <= epsilon/2")
    r = _IdentityDistance(X)
    L = max(r.lipschitz, 1e-300)
    times: list[float] = []
    t = step
    while t <= t_max:
        rt = r(t)
        if rt > 2 * epsilon:
            t += max((rt - epsilon) / L, step)
            continue
        if r.slope_squared(t) >= 0:
            t += step
            continue
        lo = t
        hi = t + step
        while hi <= t_max and r.slope_squared(hi) < 0:
            lo, hi = hi, hi + step
        if hi > t_max:
            break
        t_star = brentq(r.slope_squared, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
        if r(t_star) < epsilon and (not times or t_star - times[-1] > step):
            times.append(t_star)
        t = max(hi, t_star + step)
    times_arr = np.array(times)
    flow = SkewExp(X.matrix)
    I = np.eye(X.group.matrix_dim)
    residuals = np.array([np.linalg.norm(flow(ti) - I) for ti in times_arr])
    return RecurrenceSequence(X, epsilon, times_arr, residuals)


def omega_return(spec: BiquotientSpec, g: GroupElement, X: AlgebraElement,
                 sequence: RecurrenceSequence, omega: OmegaSubspace | None = None) -> CheckReport:
    """Parallel transport of Omega to each recurrence time, compared with Omega.

    Two measurements per time: principal angles to Omega in left coordinates,
    and the horizontal part of the transported vectors measured in the
    vertical space at ``g`` (the transported vectors are vertical at
    ``g exp(t_i X)``, which is within ``epsilon`` of ``g``).
    """
    omega = omega if omega is not None else omega_subspace(spec, g, X)
    tol = RETURN_FACTOR * sequence.epsilon
    if omega.rank == 0:
        return CheckReport("omega-return", True, {"omega_rank": 0}, {"angle": tol}, status="vacuous")
    if len(sequence) == 0:
        return CheckReport("omega-return", False, {"omega_rank": omega.rank, "recurrences": 0},
                           {"angle": tol}, status="no-recurrence")
    U = transport_operator(X)
    frame = vertical_frame(spec, g)
    angles, vresid = [], []
    for ti in sequence.times:
        moved = U(ti) @ omega.basis
        angles.append(float(principal_angles(omega.basis, moved).max()))
        vresid.append(max(frame.horizontal_residual(c) for c in moved.T))
    angles_arr, vres_arr = np.array(angles), np.array(vresid)
    passed = bool(angles_arr.max() <= tol and vres_arr.max() <= tol)
    return CheckReport(
        "omega-return", passed,
        {"omega_rank": omega.rank, "recurrences": len(sequence), "epsilon": sequence.epsilon,
         "max_angle": float(angles_arr.max()), "max_vertical_defect": float(vres_arr.max()),
         "first_time": float(sequence.times[0]), "last_time": float(sequence.times[-1])},
        {"angle": tol, "vertical_defect": tol},
        series={"angles": np.column_stack([sequence.times, angles_arr, vres_arr])},
    )


# growth analysis

def fit_slope(ts: np.ndarray, ys: np.ndarray) -> float:
    return float(np.polyfit(ts, ys, 1)[0])


def window_slopes(ts: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Least-squares slope of ``ys`` over ``[t/2, t]`` at every sample ``t``."""
    ts = np.asarray(ts, dtype=float)
    ys = np.asarray(ys, dtype=float)
    c1 = np.concatenate([[0.0], np.cumsum(ts)])
    c2 = np.concatenate([[0.0], np.cumsum(ts * ts)])
    cy = np.concatenate([[0.0], np.cumsum(ys)])
    cty = np.concatenate([[0.0], np.cumsum(ts * ys)])
    start = np.searchsorted(ts, ts / 2, side="left")
    end = np.arange(1, len(ts) + 1)
    n = end - start
    st, stt = c1[end] - c1[start], c2[end] - c2[start]
    sy, sty = cy[end] - cy[start], cty[end] - cty[start]
    den = n * stt - st * st
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(den > 0, (n * sty - st * sy) / np.where(den > 0, den, 1.0), np.nan)
    return out


def growth_profile(field: HolonomyJacobiField | ClosedFormJacobiField, ts: np.ndarray) -> np.ndarray:
    """Columns ``(t, |J(t)|, slope over [t/2, t])``."""
    values = field.route_b(ts) if isinstance(field, HolonomyJacobiField) else field.evaluate_many(ts)
    norms = np.linalg.norm(values, axis=1)
    return np.column_stack([ts, norms, window_slopes(ts, norms)])


def boundedness_audit(spec: BiquotientSpec, g: GroupElement, X: AlgebraElement, T: float = 500.0,
                      samples: int = 2001) -> CheckReport:
    """F_0, sup |J| and late slope for holonomy fields of the generator basis at ``g``.

    The basis is the normalized action fields rather than an orthonormal
    frame: each generator field has constant norm when its generator is
    one-sided, so a nonzero slope can only come from genuine growth.
    """
    ts = np.linspace(0.0, T, samples)
    late = ts >= T / 2
    fields = vertical_basis_fields(spec, g, X, basis="generators")
    f0, slope, ratio = 0.0, 0.0, 0.0
    worst_profile = None
    for field in fields:
        prof = growth_profile(field, ts)
        s = fit_slope(ts[late], prof[late, 1])
        f0 = max(f0, float(np.linalg.norm(field.F0)))
        if worst_profile is None or abs(s) >= slope:
            worst_profile = prof
        slope = max(slope, abs(s))
        ratio = max(ratio, float(prof[:, 1].max()) / field.generator_bound())

    omega = omega_subspace(spec, g, X)
    perp_resid = 0.0
    if omega.rank:
        D = derivative_operator(spec, g, X)
        perp_resid = float(np.abs(omega.basis.T @ D @ omega.perp()).max(initial=0.0))

    passed = f0 < F0_TOL and slope < SLOPE_TOL and ratio <= SUP_FACTOR and perp_resid < OMEGA_PERP_TOL
    return CheckReport(
        "boundedness-audit", passed,
        {"max_F0": f0, "max_abs_slope": slope, "max_sup_over_bound": ratio,
         "omega_rank": omega.rank, "omega_perp_derivative": perp_resid, "fields": len(fields), "T": T},
        {"max_F0": F0_TOL, "max_abs_slope": SLOPE_TOL, "max_sup_over_bound": SUP_FACTOR,
         "omega_perp_derivative": OMEGA_PERP_TOL},
        series={"growth": worst_profile},
    )


def synthetic_unbounded_field(X: AlgebraElement, f0_norm: float = 0.1,
                              rng: np.random.Generator | None = None) -> ClosedFormJacobiField:
    """A Jacobi field with ``|F_0| = f0_norm`` plus bounded oscillating parts.

    ``F_0`` points along a unit vector of ``V_0`` orthogonal to ``X`` when one
    exists, otherwise along ``X``.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    dec = decompose(X)
    V0 = dec.eigenspaces[0]
    perp = V0 - np.outer(X.coords, X.coords @ V0)
    u, s, _ = np.linalg.svd(perp, full_matrices=False)
    direction = u[:, 0] if s.size and s[0] > 1e-8 else X.coords
    G = X.group
    osc = sum((dec.project(i, rng.standard_normal(G.algebra_dim)) for i in range(1, len(dec.eigenvalues))),
              np.zeros(G.algebra_dim))
    J0 = AlgebraElement(G, osc)
    J0p = AlgebraElement(G, f0_norm * direction)
    return jacobi_from_initial(X, J0, J0p, dec)
