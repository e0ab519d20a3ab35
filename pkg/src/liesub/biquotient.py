"""Biquotient submersions ``G -> G//H``.

``H`` is given infinitesimally by generator pairs ``(P_a, Q_a)`` acting as
``g -> exp(sP) g exp(-sQ)``.  The action field of a generator at ``g`` has
left coordinate ``Ad_{g^-1} P - Q``; these fields span the vertical space.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .jacobi import AdSquaredDecomposition, ClosedFormJacobiField, decompose, jacobi_from_initial
from .liegroup import (
    AlgebraElement,
    GroupElement,
    GroupSpec,
    SkewExp,
    TangentVector,
    _check_same,
    _require_unit,
    complement,
    product,
    special_orthogonal,
    special_unitary,
)

VERTICAL_TOL = 1e-10
RANK_TOL = 1e-8


class NotFreeError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class BiquotientSpec:
    group: GroupSpec
    generators: tuple[tuple[AlgebraElement, AlgebraElement], ...]
    name: str = "custom"
    properties: tuple[str, ...] = ()
    # set on 2-sided reductions: the group G of the original G//H
    reduced_from: "BiquotientSpec | None" = field(default=None, repr=False)

    def __post_init__(self):
        if not self.generators:
            raise ValueError("need at least one generator")
        for P, Q in self.generators:
            _check_same(self.group, P.group)
            _check_same(self.group, Q.group)
        gram = self.generator_matrix().T @ self.generator_matrix()
        if not np.allclose(gram, np.eye(len(self.generators)), atol=1e-10, rtol=0):
            raise ValueError(f"{self.name}: generators must be orthonormal in the product metric")

    def generator_matrix(self) -> np.ndarray:
        """Generators stacked as columns ``(P_a, Q_a)`` of length ``2 dim g``."""
        return np.array([np.concatenate([P.coords, Q.coords]) for P, Q in self.generators]).T

    @property
    def P(self) -> np.ndarray:
        return np.array([P.coords for P, _ in self.generators]).T

    @property
    def Q(self) -> np.ndarray:
        return np.array([Q.coords for _, Q in self.generators]).T

    @property
    def vertical_dim(self) -> int:
        return len(self.generators)

    @property
    def horizontal_dim(self) -> int:
        return self.group.algebra_dim - self.vertical_dim

    def is_product_subgroup(self) -> bool:
        return all(np.allclose(P.coords, 0) or np.allclose(Q.coords, 0) for P, Q in self.generators)

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "group": group_to_config(self.group),
            "generators": [{"P": P.coords.tolist(), "Q": Q.coords.tolist()} for P, Q in self.generators],
            "properties": list(self.properties),
        }


def parse_group(desc: Any) -> GroupSpec:
    """Group from ``"SU(3)"``, ``"SO(4)"``, ``"SU(2)xSU(2)"`` or ``{"product": [a, b]}``."""
    if isinstance(desc, dict):
        if set(desc) != {"product"} or len(desc["product"]) != 2:
            raise ValueError(f"bad group descriptor {desc!r}")
        a, b = desc["product"]
        return product(parse_group(a), parse_group(b))
    if not isinstance(desc, str):
        raise ValueError(f"bad group descriptor {desc!r}")
    parts = desc.replace(" ", "").split("x")
    groups = []
    for p in parts:
        up = p.upper()
        if up.startswith("SU(") and up.endswith(")"):
            groups.append(special_unitary(int(up[3:-1])))
        elif up.startswith("SO(") and up.endswith(")"):
            groups.append(special_orthogonal(int(up[3:-1])))
        else:
            raise ValueError(f"unknown group {p!r}")
    out = groups[0]
    for g in groups[1:]:
        out = product(out, g)
    return out


def group_to_config(group: GroupSpec) -> Any:
    if group.factors:
        return {"product": [group_to_config(f) for f in group.factors]}
    return group.name


def spec_from_dict(d: dict[str, Any]) -> BiquotientSpec:
    """Inverse of :func:`describe`; the derived dimension keys are optional but checked."""
    unknown = set(d) - {"name", "group", "generators", "properties", "vertical_dim", "horizontal_dim"}
    if unknown:
        raise ValueError(f"unknown keys in custom spec: {sorted(unknown)}")
    group = parse_group(d["group"])
    gens = tuple((group.element(g["P"]), group.element(g["Q"])) for g in d["generators"])
    spec = BiquotientSpec(group, gens, d.get("name", "custom"), tuple(d.get("properties", ())))
    for key in ("vertical_dim", "horizontal_dim"):
        if key in d and d[key] != getattr(spec, key):
            raise ValueError(f"{key} = {d[key]} does not match the generators ({getattr(spec, key)})")
    return spec


# action fields and the vertical/horizontal split

def action_coords(group: GroupSpec, g: np.ndarray, P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Left coordinate of the field generated by ``(P, Q)`` at ``g``."""
    return group.to_coords(g.conj().T @ group.to_matrix(P) @ g) - Q


def action_matrix(spec: BiquotientSpec, g: GroupElement) -> np.ndarray:
    """Columns: left coordinates of every action field at ``g``."""
    Ad_inv = spec.group.Ad_matrix(g.matrix.conj().T)
    return Ad_inv @ spec.P - spec.Q


def action_field(spec: BiquotientSpec, generator_index: int, g: GroupElement) -> TangentVector:
    if not 0 <= generator_index < len(spec.generators):
        raise IndexError(f"generator index {generator_index} out of range")
    P, Q = spec.generators[generator_index]
    c = action_coords(spec.group, g.matrix, P.coords, Q.coords)
    return TangentVector(g, AlgebraElement(spec.group, c))


@dataclass(frozen=True, eq=False)
class VerticalFrame:
    base: GroupElement
    raw: np.ndarray  # action field coordinates, one column per generator
    basis: np.ndarray  # orthonormal columns spanning the vertical space

    @property
    def vectors(self) -> tuple[TangentVector, ...]:
        G = self.base.group
        return tuple(TangentVector(self.base, AlgebraElement(G, c)) for c in self.basis.T)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def project(self, x: np.ndarray) -> np.ndarray:
        return self.basis @ (self.basis.T @ x)

    def vertical_residual(self, x: np.ndarray) -> float:
        """Norm of the vertical part of ``x``."""
        return float(np.linalg.norm(self.basis.T @ x))

    def horizontal_residual(self, x: np.ndarray) -> float:
        """Norm of the horizontal part of ``x``."""
        return float(np.linalg.norm(x - self.project(x)))

    def horizontal_basis(self) -> np.ndarray:
        return complement(self.basis, self.basis.shape[0])


def vertical_frame(spec: BiquotientSpec, g: GroupElement) -> VerticalFrame:
    _check_same(spec.group, g.group)
    K = action_matrix(spec, g)
    U, s, _ = np.linalg.svd(K, full_matrices=False)
    if s.min() < RANK_TOL * max(1.0, s.max()):
        raise NotFreeError(f"action not free at g (smallest singular value {s.min():.2e})")
    # QR keeps the frame tied to generator order; the SVD is only the rank test
    Qm, R = np.linalg.qr(K)
    Qm = Qm * np.sign(np.diag(R))[None, :]
    return VerticalFrame(g, K, Qm)


def horizontal_project(spec: BiquotientSpec, g: GroupElement, v: TangentVector) -> TangentVector:
    if not np.allclose(v.base.matrix, g.matrix, atol=1e-12, rtol=0):
        raise ValueError("tangent vector is not based at g")
    frame = vertical_frame(spec, g)
    x = v.left_coord.coords
    return TangentVector(g, AlgebraElement(spec.group, x - frame.project(x)))


# holonomy Jacobi fields

@dataclass(frozen=True, eq=False)
class HolonomyJacobiField:
    spec: BiquotientSpec
    base: GroupElement
    X: AlgebraElement
    v: AlgebraElement
    combination: np.ndarray  # v = sum_a c_a * action field a at base
    closed_form: ClosedFormJacobiField
    a_term: np.ndarray  # horizontal part of J'(0)
    t_term: np.ndarray  # vertical part of J'(0)

    @property
    def initial_derivative(self) -> np.ndarray:
        return self.a_term + self.t_term

    @property
    def F0(self) -> np.ndarray:
        return self.closed_form.F0

    def generator_bound(self) -> float:
        """``sum |c_a| (|P_a| + |Q_a|)``, an a priori bound on ``|J(t)|``."""
        norms = np.linalg.norm(self.spec.P, axis=0) + np.linalg.norm(self.spec.Q, axis=0)
        return float(np.abs(self.combination) @ norms)

    def route_a(self, ts: np.ndarray) -> np.ndarray:
        """Action field of the combination along ``gamma(t)``; rows are left coordinates."""
        G = self.spec.group
        Ad_inv = G.Ad_matrix(self.base.matrix.conj().T)
        p = Ad_inv @ self.spec.P @ self.combination
        q = self.spec.Q @ self.combination
        flow = SkewExp(-G.ad_matrix(self.X.coords))
        return flow.apply(ts, p) - q[None, :]

    def route_b(self, ts: np.ndarray) -> np.ndarray:
        return self.closed_form.evaluate_many(ts)

    def points(self, ts: np.ndarray) -> list[GroupElement]:
        flow = SkewExp(self.X.matrix)
        return [GroupElement(self.spec.group, self.base.matrix @ M) for M in flow.many(ts)]


def _combination(spec: BiquotientSpec, g: GroupElement, v: AlgebraElement) -> np.ndarray:
    K = action_matrix(spec, g)
    c, *_ = np.linalg.lstsq(K, v.coords, rcond=None)
    resid = np.linalg.norm(K @ c - v.coords)
    if resid > VERTICAL_TOL * max(1.0, v.norm()):
        raise ValueError(f"v is not vertical at g (residual {resid:.2e})")
    return c


def _check_horizontal(spec: BiquotientSpec, g: GroupElement, X: AlgebraElement) -> None:
    _require_unit(X)
    frame = vertical_frame(spec, g)
    r = frame.vertical_residual(X.coords)
    if r > VERTICAL_TOL:
        raise ValueError(f"X is not horizontal at g (vertical part {r:.2e})")


def initial_covariant_derivative(spec: BiquotientSpec, g: GroupElement, X: AlgebraElement,
                                 combination: np.ndarray) -> np.ndarray:
    """``D_t J`` at ``t = 0`` for the action field of ``combination`` along ``g exp(tX)``.

    With ``p = Ad_{g^-1} P`` the left coordinate is ``Ad_{exp(-tX)} p - Q``,
    whose derivative is ``-[X, p]``; adding ``[X, J]/2`` gives
    ``-[X, p + Q]/2``.
    """
    G = spec.group
    Ad_inv = G.Ad_matrix(g.matrix.conj().T)
    s = Ad_inv @ spec.P @ combination + spec.Q @ combination
    return -0.5 * G.bracket_coords(X.coords, s)


def holonomy_field(spec: BiquotientSpec, g: GroupElement, v: AlgebraElement, X: AlgebraElement,
                   decomposition: AdSquaredDecomposition | None = None) -> HolonomyJacobiField:
    """Holonomy Jacobi field with both routes attached.

    Route A is the action field itself.  Route B feeds ``(v, J'(0))`` into the
    closed-form Jacobi solution, where ``J'(0)`` is split into its horizontal
    (A-tensor) and vertical (T-tensor) parts at ``g``.
    """
    _check_horizontal(spec, g, X)
    c = _combination(spec, g, v)
    Jp = initial_covariant_derivative(spec, g, X, c)
    frame = vertical_frame(spec, g)
    t_term = frame.project(Jp)
    a_term = Jp - t_term
    cf = jacobi_from_initial(X, v, AlgebraElement(spec.group, Jp), decomposition)
    return HolonomyJacobiField(spec, g, X, v, c, cf, a_term, t_term)


def holonomy_field_closed_form(spec: BiquotientSpec, v: TangentVector, X: AlgebraElement) -> HolonomyJacobiField:
    """Route A entry point: ``evaluate`` with :meth:`HolonomyJacobiField.route_a`."""
    return holonomy_field(spec, v.base, v.left_coord, X)


def holonomy_field_via_jacobi(spec: BiquotientSpec, v: TangentVector, X: AlgebraElement) -> HolonomyJacobiField:
    """Route B entry point: ``evaluate`` with :meth:`HolonomyJacobiField.route_b`."""
    return holonomy_field(spec, v.base, v.left_coord, X)


def route_discrepancy(field: HolonomyJacobiField, ts: np.ndarray) -> float:
    return float(np.abs(field.route_a(ts) - field.route_b(ts)).max())


def verticality_residual(field: HolonomyJacobiField, ts: np.ndarray, use_route: str = "b") -> float:
    """Largest horizontal component of ``J(t)`` measured in the frame at ``gamma(t)``."""
    values = field.route_b(ts) if use_route == "b" else field.route_a(ts)
    worst = 0.0
    for pt, J in zip(field.points(ts), values):
        worst = max(worst, vertical_frame(field.spec, pt).horizontal_residual(J))
    return worst


def vertical_basis_fields(spec: BiquotientSpec, g: GroupElement, X: AlgebraElement,
                          basis: str = "generators") -> list[HolonomyJacobiField]:
    """Holonomy fields for a basis of the vertical space at ``g``.

    ``basis="generators"`` uses each normalized action field, ``"orthonormal"``
    the QR frame.
    """
    frame = vertical_frame(spec, g)
    dec = decompose(X)
    cols = frame.raw / np.linalg.norm(frame.raw, axis=0) if basis == "generators" else frame.basis
    return [holonomy_field(spec, g, AlgebraElement(spec.group, c), X, dec) for c in cols.T]


# Eschenburg reduction G//H = Delta G \ (G x G) / H

def eschenburg_two_sided(spec: BiquotientSpec) -> BiquotientSpec:
    G = spec.group
    GG = product(G, G)
    gens = []
    for k in range(G.algebra_dim):
        d = G.basis_element(k)
        gens.append((GG.pair(d, d) / np.sqrt(2), GG.zero()))
    for P, Q in spec.generators:
        gens.append((GG.zero(), GG.pair(P, Q)))
    props = ("2-sided", f"reduction of {spec.name}")
    return BiquotientSpec(GG, tuple(gens), f"{spec.name}-eschenburg", props, reduced_from=spec)


def eschenburg_projection(reduced: BiquotientSpec, pair: GroupElement,
                          xi: AlgebraElement) -> tuple[GroupElement, AlgebraElement]:
    """Push a left-trivialized vector at ``(g1, g2)`` down to ``G`` via ``g1^-1 g2``."""
    if reduced.reduced_from is None:
        raise ValueError("spec is not an Eschenburg reduction")
    G = reduced.reduced_from.group
    n = G.matrix_dim
    g1, g2 = pair.matrix[:n, :n], pair.matrix[n:, n:]
    g = g1.conj().T @ g2
    xi1, xi2 = reduced.group.split(xi)
    down = xi2.coords - G.Ad_coords(g.conj().T, xi1.coords)
    return GroupElement(G, g), AlgebraElement(G, down)


def lift_to_pair(G: GroupSpec, GG: GroupSpec, g: GroupElement) -> GroupElement:
    """The point ``(e, g)`` of ``G x G``, which lies over ``g``."""
    n = G.matrix_dim
    M = np.eye(2 * n, dtype=complex)
    M[n:, n:] = g.matrix
    return GroupElement(GG, M)


# presets

def _su2_u(k: int) -> AlgebraElement:
    """``u1 = diag(i,-i)``, ``u2 = [[0,1],[-1,0]]``, ``u3 = [[0,i],[i,0]]``."""
    return special_unitary(2).basis_element(k - 1) * np.sqrt(2)


def hopf() -> BiquotientSpec:
    G = special_unitary(2)
    gen = (G.zero(), _su2_u(1) / np.sqrt(2))
    return BiquotientSpec(G, (gen,), "hopf", ("right circle action", "fibers totally geodesic"))


def su2xsu2_diag_circle() -> BiquotientSpec:
    S = special_unitary(2)
    G = product(S, S)
    u1 = _su2_u(1)
    gen = (G.pair(u1, u1) / 2, G.zero())
    return BiquotientSpec(G, (gen,), "su2xsu2-diag-circle",
                          ("left diagonal circle action", "fibers totally geodesic", "horizontal flats exist"))


def su3_circle() -> BiquotientSpec:
    G = special_unitary(3)
    w = G.from_matrix(np.diag([1j, 1j, -2j]) / np.sqrt(6))
    gen = (G.zero(), w)
    return BiquotientSpec(G, (gen,), "su3-circle-(1,1,-2)",
                          ("right circle action", "fibers totally geodesic"))


def su3xsu2_circle() -> BiquotientSpec:
    S3, S2 = special_unitary(3), special_unitary(2)
    G = product(S3, S2)
    w = S3.from_matrix(np.diag([1j, 1j, -2j]) / np.sqrt(6))
    gen = (G.pair(w, S2.zero()), G.zero())
    return BiquotientSpec(G, (gen,), "su3xsu2-circle",
                          ("left circle action on the SU(3) factor", "fibers totally geodesic",
                           "rank-3 torus: horizontal directions with incommensurable frequencies"))


def _su3_eschenburg() -> BiquotientSpec:
    return eschenburg_two_sided(su3_circle())


PRESETS = {
    "hopf": hopf,
    "su2xsu2-diag-circle": su2xsu2_diag_circle,
    "su3-circle-(1,1,-2)": su3_circle,
    "su3-circle-(1,1,-2)-eschenburg": _su3_eschenburg,
    "su3xsu2-circle": su3xsu2_circle,
}

CORE_PRESETS = ("hopf", "su2xsu2-diag-circle", "su3-circle-(1,1,-2)", "su3-circle-(1,1,-2)-eschenburg")


def preset(name: str) -> BiquotientSpec:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; known: {sorted(PRESETS)}") from None


def random_horizontal_unit(spec: BiquotientSpec, g: GroupElement, rng: np.random.Generator) -> AlgebraElement:
    Hb = vertical_frame(spec, g).horizontal_basis()
    a = rng.standard_normal(Hb.shape[1])
    x = Hb @ a
    return AlgebraElement(spec.group, x / np.linalg.norm(x))


def random_vertical(spec: BiquotientSpec, g: GroupElement, rng: np.random.Generator) -> AlgebraElement:
    frame = vertical_frame(spec, g)
    return AlgebraElement(spec.group, frame.basis @ rng.standard_normal(frame.dim))


def describe(spec: BiquotientSpec) -> dict[str, Any]:
    d = spec.to_dict()
    d["vertical_dim"] = spec.vertical_dim
    d["horizontal_dim"] = spec.horizontal_dim
    return d


def sample_points(spec: BiquotientSpec, rng: np.random.Generator, count: int) -> Sequence[GroupElement]:
    return [spec.group.random_group_element(rng) for _ in range(count)]
