"""Twisted product submersion with unbounded holonomy Jacobi fields.

Base: flat torus ``R^2/(2 pi Z)^2`` with the unit field ``X = d/dx1``.
Fiber: the circle with ``Y = sin(theta) d/dtheta``.  Lifting a base path
moves the fiber coordinate along ``Y`` for total time
``T = int mubar(<gamma', X>)``, where ``mu(s) = exp(-1/s)`` for ``s > 0`` (zero
otherwise) and ``mubar`` is its odd extension.  The flow of ``Y`` has a
repelling fixed point at 0 (rate ``e^T``) and an attracting one at ``pi``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .report import CheckReport

RTOL = 1e-12
ATOL = 1e-14
GROWTH_REL_TOL = 0.01
GROUP_LAW_TOL = 1e-10


def mu(s):
    s = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        out = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
    return out if out.ndim else float(out)


def mu_bar(s):
    s = np.asarray(s, dtype=float)
    out = np.sign(s) * mu(np.abs(s))
    return out if out.ndim else float(out)


def fiber_field(theta):
    return np.sin(theta)


@dataclass(frozen=True)
class ExampleEConfig:
    period: float = 2 * np.pi
    X: tuple[float, float] = (1.0, 0.0)

    def pairing(self, phi: float) -> float:
        """``<gamma', X>`` for the unit-speed geodesic with direction angle ``phi``."""
        return float(np.cos(phi) * self.X[0] + np.sin(phi) * self.X[1])

    def rate(self, phi: float) -> float:
        return mu_bar(self.pairing(phi))

    def distribution_rate(self, phi: float) -> float:
        """Fiber speed from lifting with ``span{(X, mu(|X|) Y)} + {(A, 0) | A perp X}``.

        That lift moves the fiber at ``mu(|X|) <gamma', X>``, which agrees with
        ``mubar(<gamma', X>)`` only where the pairing is 0 or +-1.
        """
        return mu(float(np.hypot(*self.X))) * self.pairing(phi)


def mu_smoothness_residuals(h: float = 1e-2) -> list[float]:
    """Right-sided finite differences of orders 1..3 of ``mu`` at 0."""
    vals = mu(h * np.arange(4))
    out = []
    for k in range(1, 4):
        out.append(float(abs(np.diff(vals, k)[0]) / h ** k))
    return out


def holonomy_time(phi: float, t: float, config: ExampleEConfig | None = None) -> float:
    config = config or ExampleEConfig()
    return t * config.rate(phi)


@dataclass(frozen=True)
class HolonomyFlow:
    T: float
    theta0: float
    theta_T: float
    derivative: float
    closed_theta_T: float
    closed_derivative: float

    @property
    def closed_form_error(self) -> float:
        return abs(_wrap(self.theta_T - self.closed_theta_T))


def _wrap(a: float) -> float:
    return float((a + np.pi) % (2 * np.pi) - np.pi)


def flow_closed_form(theta0: float, T: float) -> tuple[float, float]:
    """``tan(theta_T/2) = e^T tan(theta0/2)`` and ``dtheta_T/dtheta0``."""
    k = np.round(theta0 / (2 * np.pi))
    base = theta0 - 2 * np.pi * k
    if abs(np.sin(base)) < 1e-300 or base in (0.0, np.pi, -np.pi):
        theta_T = theta0
        return float(theta_T), float(np.exp(T * np.cos(base)))
    theta_T = 2 * np.arctan(np.exp(T) * np.tan(base / 2)) + 2 * np.pi * k
    return float(theta_T), float(np.sin(theta_T) / np.sin(theta0))


def _is_fixed(theta0: float) -> bool:
    r = theta0 % np.pi
    return r == 0.0 or np.isclose(r, np.pi, rtol=0, atol=4 * np.finfo(float).eps * max(1.0, abs(theta0)))


def flow_Y(theta0: float, T: float) -> HolonomyFlow:
    """Flow ``theta' = sin(theta)`` for time ``T`` with its variational equation."""
    closed, closed_d = flow_closed_form(theta0, T)
    if T == 0:
        return HolonomyFlow(T, theta0, theta0, 1.0, closed, closed_d)
    if _is_fixed(theta0):
        return HolonomyFlow(T, theta0, theta0, float(np.exp(T * np.cos(theta0))), closed, closed_d)

    def rhs(_, y):
        return [np.sin(y[0]), np.cos(y[0]) * y[1]]

    sol = solve_ivp(rhs, (0.0, T), [theta0, 1.0], method="DOP853", rtol=RTOL, atol=ATOL)
    th, d = sol.y[:, -1]
    return HolonomyFlow(T, theta0, float(th), float(d), closed, closed_d)


def lift_geodesic(phi: float, t_max: float, samples: int, theta0: float = 0.0,
                  config: ExampleEConfig | None = None) -> np.ndarray:
    """Horizontal lift of the base geodesic through ``(0, 0, theta0)``.

    Integrates base position, fiber coordinate and the fiber-direction
    variation together.  Columns: ``t, x1, x2, theta, |J|``.
    """
    config = config or ExampleEConfig()
    c, s = np.cos(phi), np.sin(phi)
    X = config.X

    def rhs(_, y):
        rate = mu_bar(c * X[0] + s * X[1])
        return [c, s, rate * np.sin(y[2]), rate * np.cos(y[2]) * y[3]]

    ts = np.linspace(0.0, t_max, samples)
    sol = solve_ivp(rhs, (0.0, t_max), [0.0, 0.0, theta0, 1.0], method="DOP853",
                    t_eval=ts, rtol=RTOL, atol=ATOL)
    x1 = np.mod(sol.y[0], config.period)
    x2 = np.mod(sol.y[1], config.period)
    return np.column_stack([ts, x1, x2, sol.y[2], np.abs(sol.y[3])])


def holonomy_jacobi_growth(config: ExampleEConfig | None, phi: float, t_max: float = 50.0,
                           samples: int = 501) -> CheckReport:
    """``|J(t)|`` along the lift through the repelling fixed point ``theta0 = 0``."""
    config = config or ExampleEConfig()
    rate = config.rate(phi)
    lift = lift_geodesic(phi, t_max, samples, 0.0, config)
    ts, norms = lift[:, 0], lift[:, 4]
    closed = np.exp(rate * ts)
    rel = float(np.abs(norms / closed - 1.0).max())
    series = np.column_stack([ts, lift[:, 3], norms])
    if rate == 0.0:
        const = float(np.abs(norms - 1.0).max())
        return CheckReport("example-e-growth", const < 1e-12,
                           {"phi": phi, "rate": 0.0, "max_deviation_from_1": const},
                           {"max_deviation_from_1": 1e-12}, status="no-growth",
                           series={"growth": series})
    pos = norms > 0
    exponent = float(np.polyfit(ts[pos], np.log(norms[pos]), 1)[0])
    half = len(ts) // 2
    ratio_ok = bool(norms[-1] / norms[half] >= np.exp((ts[-1] - ts[half]) * rate / 2))
    passed = rel < GROWTH_REL_TOL and ratio_ok
    return CheckReport(
        "example-e-growth", passed,
        {"phi": phi, "rate": rate, "fitted_exponent": exponent, "max_relative_error": rel,
         "norm_at_t_max": float(norms[-1]), "t_max": t_max, "unbounded_ratio_test": ratio_ok},
        {"max_relative_error": GROWTH_REL_TOL},
        series={"growth": series},
    )


def lipschitz_estimate(config: ExampleEConfig | None, T: float, samples: int = 64,
                       extra: tuple[float, ...] = (1e-4,)) -> float:
    """Largest ``|dtheta_T/dtheta0|`` over an even grid on the circle plus ``extra``."""
    if samples < 10:
        raise ValueError("samples must be >= 10")
    grid = np.concatenate([np.linspace(0.0, 2 * np.pi, samples, endpoint=False), extra])
    return max(abs(flow_Y(float(th), T).derivative) for th in grid)


def group_law_residual(thetas: np.ndarray, T1: float, T2: float) -> float:
    """``max |phi_{T2}(phi_{T1}(theta)) - phi_{T1+T2}(theta)|`` via the closed form."""
    worst = 0.0
    for th in np.asarray(thetas, dtype=float):
        a, _ = flow_closed_form(flow_closed_form(th, T1)[0], T2)
        b, _ = flow_closed_form(th, T1 + T2)
        worst = max(worst, abs(_wrap(a - b)))
    return worst


def lift_consistency(phi: float, theta0: float = 1.0, t_max: float = 5.0, samples: int = 51,
                     h: float = 1e-5, config: ExampleEConfig | None = None) -> float:
    """Centered difference of the lifted fiber coordinate against ``mubar(<gamma', X>) Y(theta)``."""
    config = config or ExampleEConfig()
    rate = config.rate(phi)
    worst = 0.0
    for t in np.linspace(h, t_max, samples):
        fwd = flow_closed_form(theta0, rate * (t + h))[0]
        bwd = flow_closed_form(theta0, rate * (t - h))[0]
        mid = flow_closed_form(theta0, rate * t)[0]
        worst = max(worst, abs((fwd - bwd) / (2 * h) - rate * fiber_field(mid)))
    return worst
