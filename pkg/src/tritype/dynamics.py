"""Mean-field vector fields on the simplex and their Lyapunov analysis.

Fields are evaluated in full (x, y, z) form; the reduction z = 1 - x - y
is used only for ODE integration, Jacobians and the stationary-point
polynomials, and the two forms are cross-checked in the tests.  The two
named models are:

* ``perturbed``: the two-neighbour duel with uniform-noise weight k = h/3;
* ``tournament``: the four-neighbour knockout.

For both, d(xyz)/dt along the flow equals yz*P1 + xz*P2 + xy*P3 and has
a known factorised form; its reduced polynomial f(x, y) (z eliminated)
is what the stationary-point search classifies.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from math import comb
from typing import Optional, Sequence, Union

import numpy as np
from numba import njit

from .core import RuleTable, SimplexPoint
from .engine import exact_drift

MODELS = ("perturbed", "tournament")

_EMPTY_U = np.zeros((0, 3), dtype=np.int64)
_EMPTY_C = np.zeros(0, dtype=np.float64)
_EMPTY_P = np.zeros((0, 3), dtype=np.float64)


class IntegrationError(RuntimeError):
    """ODE trajectory left the simplex; the step size is too large."""


@njit(cache=True, nogil=True)
def _field3(model_id, k, u_arr, coef, probs, x, y, z):
    """Vector field components at (x, y, z);
    model_id 0/1/2/3 = perturbed/tournament/rule/zero."""
    if model_id == 3:
        return 0.0, 0.0, 0.0
    if model_id == 0:
        p1 = x / 2 * (z - y) + y * (x + z) * k - x * (x + 2 * z) * k + 0.5 * (y * y + z * z) * k
        p2 = y / 2 * (x - z) + z * (x + y) * k - y * (2 * x + y) * k + 0.5 * (x * x + z * z) * k
        p3 = z / 2 * (y - x) + x * (y + z) * k - z * (2 * y + z) * k + 0.5 * (x * x + y * y) * k
        return p1, p2, p3
    if model_id == 1:
        p1 = x / 2 * (
            -3 * x * x * y + x * x * z - 3 * x * y * y - 2 * x * y * z
            + 3 * x * z * z - y ** 3 - 3 * y * y * z + 5 * y * z * z + 3 * z ** 3
        )
        p2 = y / 2 * (
            -3 * y * y * z + y * y * x - 3 * y * z * z - 2 * x * y * z
            + 3 * y * x * x - z ** 3 - 3 * z * z * x + 5 * z * x * x + 3 * x ** 3
        )
        p3 = z / 2 * (
            -3 * z * z * x + z * z * y - 3 * z * x * x - 2 * x * y * z
            + 3 * z * y * y - x ** 3 - 3 * x * x * y + 5 * x * y * y + 3 * y ** 3
        )
        return p1, p2, p3
    # generic rule table: (q_i - x_i)/2 with q the multinomial expectation
    q0 = 0.0
    q1 = 0.0
    q2 = 0.0
    for e in range(u_arr.shape[0]):
        w = coef[e] * x ** u_arr[e, 0] * y ** u_arr[e, 1] * z ** u_arr[e, 2]
        q0 += w * probs[e, 0]
        q1 += w * probs[e, 1]
        q2 += w * probs[e, 2]
    return (q0 - x) / 2, (q1 - y) / 2, (q2 - z) / 2


def _multinomial_arrays(table: RuleTable):
    m = table.m
    u_list = []
    coef = []
    for (u1, u2, u3), _ in table.entries():
        u_list.append((u1, u2, u3))
        coef.append(comb(m, u1) * comb(m - u1, u2))
    return (
        np.array(u_list, dtype=np.int64),
        np.array(coef, dtype=np.float64),
        np.ascontiguousarray(table.probs),
    )


@dataclass(frozen=True)
class Field:
    """A 3-in/3-out vector field, tangent to the simplex."""

    kind: str  # 'perturbed' | 'tournament' | 'rule'
    k: float = 0.0
    table: Optional[RuleTable] = None
    _model_id: int = 2
    _u_arr: np.ndarray = _EMPTY_U
    _coef: np.ndarray = _EMPTY_C
    _probs: np.ndarray = _EMPTY_P

    def __call__(self, x: float, y: float, z: float) -> np.ndarray:
        return np.array(_field3(self._model_id, self.k, self._u_arr, self._coef, self._probs, x, y, z))

    def at(self, point: Union[SimplexPoint, Sequence[float]]) -> np.ndarray:
        x, y, z = tuple(point)
        return self(x, y, z)

    def reduced(self, x: float, y: float) -> tuple[float, float]:
        """(dx/dt, dy/dt) with z = 1 - x - y eliminated."""
        p1, p2, _ = _field3(self._model_id, self.k, self._u_arr, self._coef, self._probs, x, y, 1.0 - x - y)
        return p1, p2


def perturbed_field(h: float) -> Field:
    if not 0 <= h < 1:
        raise ValueError(f"h must be in [0, 1), got {h}")
    return Field(kind="perturbed", k=h / 3.0, _model_id=0)


def tournament_field() -> Field:
    return Field(kind="tournament", _model_id=1)


def field_from_rule(table: RuleTable) -> Field:
    u_arr, coef, probs = _multinomial_arrays(table)
    return Field(kind="rule", table=table, _model_id=2, _u_arr=u_arr, _coef=coef, _probs=probs)


def zero_field() -> Field:
    """The linear model's closed-form field: identically zero."""
    return Field(kind="zero", _model_id=3)


def field_for_model(model: str, h: Optional[float] = None) -> Field:
    if model == "perturbed":
        return perturbed_field(0.05 if h is None else h)
    if model == "tournament":
        return tournament_field()
    raise ValueError(f"model must be one of {MODELS}, got {model!r}")


def lyapunov_derivative(field: Field, point: Union[SimplexPoint, Sequence[float]]) -> float:
    """d(xyz)/dt along the field: yz*P1 + xz*P2 + xy*P3."""
    x, y, z = tuple(point)
    p1, p2, p3 = field(x, y, z)
    return y * z * p1 + x * z * p2 + x * y * p3


def lyapunov_closed_form(model: str, point: Union[SimplexPoint, Sequence[float]], h: Optional[float] = None):
    """The factorised d(xyz)/dt of the named model; accepts array coordinates."""
    x, y, z = tuple(point)
    if model == "perturbed":
        k = (0.05 if h is None else h) / 3.0
        return (k / 2.0) * (
            x * x * (1 - x) + y * y * (1 - y) + z * z * (1 - z) - 6 * x * y * z
        )
    if model == "tournament":
        return (x * y * z / 2.0) * (
            3 * x * x * z + 3 * x * y * y + 3 * y * z * z
            - 3 * x * x * y - 3 * y * y * z - 3 * x * z * z
            - 6 * x * y * z + 2 * x ** 3 + 2 * y ** 3 + 2 * z ** 3
        )
    raise ValueError(f"model must be one of {MODELS}, got {model!r}")


def reduced_f(model: str, x, y):
    """The reduced Lyapunov-derivative polynomial f(x, y), z eliminated.

    For the perturbed model f equals d(xyz)/dt divided by k/2; for the
    tournament model it is the cubic cofactor of xyz/2.  Constant factors
    are dropped, so signs and stationary points are what matter.
    """
    if model == "perturbed":
        return x - x * x + y - y * y - 10 * x * y + 9 * x * x * y + 9 * x * y * y
    if model == "tournament":
        return (
            2 - 9 * x - 3 * y + 15 * x * x + 6 * x * y - 3 * y * y
            - 6 * x ** 3 - 9 * x * x * y + 9 * x * y * y + 6 * y ** 3
        )
    raise ValueError(f"model must be one of {MODELS}, got {model!r}")


def f_gradient(model: str, x, y):
    if model == "perturbed":
        return np.array([(9 * y - 1) * (2 * x + y - 1), (9 * x - 1) * (x + 2 * y - 1)])
    if model == "tournament":
        return np.array([
            3 * (-3 + 10 * x + 2 * y - 6 * x * x - 6 * x * y + 3 * y * y),
            3 * (-1 + 2 * x - 2 * y - 3 * x * x + 6 * x * y + 6 * y * y),
        ])
    raise ValueError(f"model must be one of {MODELS}, got {model!r}")


def f_hessian(model: str, x, y) -> tuple[float, float, float]:
    """(A, B, C) = (f_xx, f_xy, f_yy) at (x, y)."""
    if model == "perturbed":
        return (18 * y - 2, 18 * (x + y) - 10, 18 * x - 2)
    if model == "tournament":
        return (6 * (5 - 6 * x - 3 * y), 6 * (1 - 3 * x + 3 * y), 6 * (-1 + 3 * x + 6 * y))
    raise ValueError(f"model must be one of {MODELS}, got {model!r}")


def f_gradient_hessian(model: str, x: float, y: float):
    """Closed-form gradient and symmetric Hessian matrix of f."""
    a, b, c = f_hessian(model, x, y)
    return f_gradient(model, x, y), np.array([[a, b], [b, c]])


@dataclass(frozen=True)
class StationaryPoint:
    location: SimplexPoint
    classification: str  # 'minimum' | 'maximum' | 'saddle' | 'degenerate'
    hessian: tuple[float, float, float]  # (f_xx, f_xy, f_yy)
    gradient_norm: float


@dataclass
class StationarySearch:
    points: list
    starts: int
    converged: int
    skipped: int
    field_identically_zero: bool = False


def interior_grid(density: int) -> np.ndarray:
    """Lattice points i/(density+1), j/(density+1) strictly inside the simplex."""
    step = 1.0 / (density + 1)
    pts = [
        (i * step, j * step, 1.0 - (i + j) * step)
        for i in range(1, density + 1)
        for j in range(1, density + 1 - i)
    ]
    return np.array(pts)


def find_stationary_points(
    model: Union[str, Field],
    grid_density: int = 30,
    tol: float = 1e-10,
) -> StationarySearch:
    """Multi-start Newton search for the stationary points of f.

    Starts on every interior grid point; converged locations are
    deduplicated within 10*tol and classified by the second-derivative
    test.  Generic rule fields have no reduced polynomial: those are
    probed for an identically-zero field instead (the linear model).
    """
    if grid_density < 10:
        raise ValueError("grid_density must be >= 10")
    if isinstance(model, Field):
        if model.kind == "rule":
            grid = interior_grid(grid_density)
            sup = max(float(np.max(np.abs(model.at(p)))) for p in grid)
            if sup < tol:
                return StationarySearch(
                    points=[], starts=len(grid), converged=0, skipped=0,
                    field_identically_zero=True,
                )
            raise ValueError(
                "no reduced polynomial for a generic rule field; "
                "use 'perturbed' or 'tournament'"
            )
        model = model.kind
    if model not in MODELS:
        raise ValueError(f"model must be one of {MODELS}, got {model!r}")

    starts = interior_grid(grid_density)
    converged = []
    skipped = 0
    for x, y, _ in starts:
        ok = False
        for _ in range(100):
            grad, hess = f_gradient_hessian(model, x, y)
            if float(np.hypot(grad[0], grad[1])) < tol:
                ok = True
                break
            det = hess[0, 0] * hess[1, 1] - hess[0, 1] * hess[1, 0]
            if abs(det) < 1e-14:
                break
            dx = (hess[1, 1] * grad[0] - hess[0, 1] * grad[1]) / det
            dy = (hess[0, 0] * grad[1] - hess[1, 0] * grad[0]) / det
            x, y = x - dx, y - dy
            if not (np.isfinite(x) and np.isfinite(y)) or max(abs(x), abs(y)) > 1e6:
                break
        if ok:
            converged.append((x, y))
        else:
            skipped += 1

    # sort before merging so the result is independent of start order
    converged.sort()
    merged: list[tuple[float, float]] = []
    for x, y in converged:
        if any(abs(x - px) <= 10 * tol and abs(y - py) <= 10 * tol for px, py in merged):
            continue
        merged.append((x, y))

    points = []
    for x, y in merged:
        z = 1.0 - x - y
        if x <= 0 or y <= 0 or z <= 0:
            continue  # stationary point of f outside the open simplex
        a, b, c = f_hessian(model, x, y)
        disc = a * c - b * b
        if abs(disc) <= tol:
            cls = "degenerate"
        elif disc > 0:
            cls = "minimum" if a > 0 else "maximum"
        else:
            cls = "saddle"
        grad = f_gradient(model, x, y)
        points.append(
            StationaryPoint(
                location=SimplexPoint(x, y, z),
                classification=cls,
                hessian=(float(a), float(b), float(c)),
                gradient_norm=float(np.hypot(grad[0], grad[1])),
            )
        )
    points.sort(key=lambda p: (p.location.x, p.location.y))
    return StationarySearch(
        points=points,
        starts=len(starts),
        converged=len(converged),
        skipped=skipped,
    )


@njit(cache=True, nogil=True)
def _rk4_reduced(model_id, k, u_arr, coef, probs, x0, y0, dt, steps, out):
    """Classic RK4 in reduced coordinates; returns renormalisation count,
    or -(failing step) if the trajectory left the simplex by more than 1e-6."""
    x = x0
    y = y0
    out[0, 0] = x
    out[0, 1] = y
    renorm = 0
    for i in range(steps):
        k1x, k1y, _ = _field3(model_id, k, u_arr, coef, probs, x, y, 1.0 - x - y)
        x2 = x + 0.5 * dt * k1x
        y2 = y + 0.5 * dt * k1y
        k2x, k2y, _ = _field3(model_id, k, u_arr, coef, probs, x2, y2, 1.0 - x2 - y2)
        x3 = x + 0.5 * dt * k2x
        y3 = y + 0.5 * dt * k2y
        k3x, k3y, _ = _field3(model_id, k, u_arr, coef, probs, x3, y3, 1.0 - x3 - y3)
        x4 = x + dt * k3x
        y4 = y + dt * k3y
        k4x, k4y, _ = _field3(model_id, k, u_arr, coef, probs, x4, y4, 1.0 - x4 - y4)
        x += dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
        y += dt / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y)
        z = 1.0 - x - y
        lo = min(x, min(y, z))
        if lo < -1e-6:
            return -(i + 1)
        if lo < -1e-9:
            if x < 0.0:
                x = 0.0
            if y < 0.0:
                y = 0.0
            if x > 1.0:
                x = 1.0
            if y > 1.0:
                y = 1.0
            if x + y > 1.0:
                s = x + y
                x /= s
                y /= s
            renorm += 1
        out[i + 1, 0] = x
        out[i + 1, 1] = y
    return renorm


@dataclass
class OdeTrajectory:
    times: np.ndarray
    states: np.ndarray  # (steps+1, 3)
    renormalizations: int

    def products(self) -> np.ndarray:
        """xyz at every recorded step."""
        return self.states[:, 0] * self.states[:, 1] * self.states[:, 2]

    def simplex_points(self) -> list[SimplexPoint]:
        return [SimplexPoint.from_weights(*row) for row in self.states]


def integrate(
    field: Field,
    x0: Union[SimplexPoint, Sequence[float]],
    dt: float,
    steps: int,
) -> OdeTrajectory:
    """RK4 flow of the field from x0; raises IntegrationError on escape."""
    if not 0 < dt <= 0.1:
        raise ValueError(f"dt must be in (0, 0.1], got {dt}")
    if steps < 0:
        raise ValueError("steps must be >= 0")
    x, y, _ = tuple(x0)
    out = np.empty((steps + 1, 2))
    status = _rk4_reduced(
        field._model_id, field.k, field._u_arr, field._coef, field._probs,
        x, y, dt, steps, out,
    )
    if status < 0:
        raise IntegrationError(
            f"trajectory left the simplex at step {-status} (dt={dt} too large?)"
        )
    states = np.column_stack([out[:, 0], out[:, 1], 1.0 - out[:, 0] - out[:, 1]])
    times = dt * np.arange(steps + 1)
    return OdeTrajectory(times=times, states=states, renormalizations=int(status))


def jacobian_eigen(
    field: Field,
    point: Union[SimplexPoint, Sequence[float]],
    step: float = 1e-6,
) -> tuple[complex, complex]:
    """Eigenvalues of the reduced 2-D field Jacobian (central differences)."""
    x, y, _ = tuple(point)
    fxp = field.reduced(x + step, y)
    fxm = field.reduced(x - step, y)
    fyp = field.reduced(x, y + step)
    fym = field.reduced(x, y - step)
    j00 = (fxp[0] - fxm[0]) / (2 * step)
    j01 = (fyp[0] - fym[0]) / (2 * step)
    j10 = (fxp[1] - fxm[1]) / (2 * step)
    j11 = (fyp[1] - fym[1]) / (2 * step)
    tr = j00 + j11
    det = j00 * j11 - j01 * j10
    root = cmath.sqrt(tr * tr - 4 * det)
    return ((tr + root) / 2, (tr - root) / 2)


def drift_discrepancy(field: Field, table: RuleTable, points: np.ndarray) -> float:
    """Max componentwise gap between the closed-form field and the exact
    multinomial drift of the rule table, over the given simplex points."""
    worst = 0.0
    for p in points:
        gap = float(np.max(np.abs(field.at(p) - exact_drift(table, p))))
        worst = max(worst, gap)
    return worst
