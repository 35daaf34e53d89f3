"""Recover semiaxes from (V1, V2, V3).

Newton's method on log V(exp x) - log target in log-semiaxis coordinates,
with a backtracking line search and iterates sorted into the chamber
la >= lb >= lc after every step.  The forward map is injective on that
chamber, so a converged answer is the answer.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Union

import numpy as np

from .quadrature import DEFAULT_SPEC, QuadratureSpec
from .volumes import (
    KAPPA,
    IntrinsicVolumes,
    Semiaxes,
    ball_v1_bound,
    forward,
    forward_and_jacobian,
)

__all__ = [
    "Status",
    "InversionSpec",
    "InversionReport",
    "Feasibility",
    "feasible",
    "initial_guess",
    "grid_guess",
    "invert",
]

# largest accepted Newton step, in log units
TRUST_STEP = 0.5
MAX_HALVINGS = 30
# extra iterations spent polishing once the tolerance is met
POLISH_STEPS = 8
GRID_SIZE = 12
GRID_MAX_RATIO = 100.0


class Status(str, enum.Enum):
    CONVERGED = "Converged"
    INFEASIBLE = "Infeasible"
    NO_CONVERGENCE = "NoConvergence"


@dataclass(frozen=True)
class InversionSpec:
    residual_tol: float = 1e-10
    max_iterations: int = 100
    quadrature: QuadratureSpec = DEFAULT_SPEC
    # relative slack allowed below the ball bound on V1
    ball_slack: float = 1e-12

    def __post_init__(self):
        if not self.residual_tol > 0:
            raise ValueError("residual_tol must be positive")
        if int(self.max_iterations) < 1:
            raise ValueError("max_iterations must be at least 1")


@dataclass
class InversionReport:
    axes: Optional[Semiaxes]
    residual: np.ndarray
    iterations: int
    status: Status
    restarts: int = 0
    violations: List[str] = field(default_factory=list)
    # residual norm of every accepted iterate, per Newton run
    history: List[List[float]] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED


@dataclass(frozen=True)
class Feasibility:
    ok: bool
    violations: List[str]


VolumesLike = Union[IntrinsicVolumes, Sequence[float]]


def _as_volumes(iv: VolumesLike) -> np.ndarray:
    if isinstance(iv, IntrinsicVolumes):
        return iv.as_array()
    arr = np.asarray(iv, dtype=float)
    if arr.shape != (3,):
        raise ValueError("expected three intrinsic volumes")
    return arr


def feasible(iv: VolumesLike, slack: float = 1e-12) -> Feasibility:
    """Necessary conditions on (V1, V2, V3); not sufficient."""
    v = _as_volumes(iv)
    bad = []
    for name, x in zip(("v1", "v2", "v3"), v):
        if not math.isfinite(x):
            bad.append(f"{name} is not finite")
        elif x <= 0:
            bad.append(f"{name} must be positive")
    if not bad:
        bound = ball_v1_bound(v[2])
        if v[0] < bound * (1 - slack):
            bad.append(f"v1 = {v[0]:.10g} below ball bound {bound:.10g}")
    return Feasibility(not bad, bad)


def _ball_radius(v3: float) -> float:
    return (v3 / KAPPA[3]) ** (1.0 / 3.0)


def _scale_to_volume(shape: np.ndarray, v3: float) -> np.ndarray:
    shape = np.sort(np.asarray(shape, dtype=float))[::-1]
    return shape * _ball_radius(v3) / np.prod(shape) ** (1.0 / 3.0)


def initial_guess(iv: VolumesLike) -> Semiaxes:
    """Starting point for Newton.

    The scale comes from the ball radius of equal volume.  The shape comes
    from treating the scale-free excesses like elementary symmetric
    functions of the axes: with e1 = 3 V1 / 4 and e2 = 3 V2 / (2 pi), which
    equal a+b+c and ab+bc+ca on balls, the roots of
    z^3 - e1 z^2 + e2 z - abc are exact for balls and close for moderate
    aspect ratios.
    """
    v = _as_volumes(iv)
    r = _ball_radius(v[2])
    ex1 = v[0] / ball_v1_bound(v[2]) - 1.0
    ex2 = v[1] ** 3 / v[2] ** 2 / (KAPPA[1] * KAPPA[2]) ** 3 * KAPPA[3] ** 2 - 1.0
    if max(abs(ex1), abs(ex2)) < 1e-14:
        return Semiaxes(r, r, r)
    e1 = 3.0 * r * (1.0 + ex1)
    e2 = 3.0 * r * r * (1.0 + ex2) ** (1.0 / 3.0)
    roots = np.roots([1.0, -e1, e2, -r**3])
    # a complex pair u +- iv becomes u +- v so the guess stays off the walls
    shape = np.abs(roots.real) + np.abs(roots.imag) * np.sign(roots.imag)
    shape = np.maximum(shape, 1e-3 * r)
    return Semiaxes(*_scale_to_volume(shape, v[2]))


def grid_guess(iv: VolumesLike, spec: QuadratureSpec = DEFAULT_SPEC) -> Semiaxes:
    """Best cell of a log-spaced grid of shape ratios (a/c, b/c), scale fixed by V3."""
    v = _as_volumes(iv)
    ratios = np.geomspace(1.0, GRID_MAX_RATIO, GRID_SIZE)
    best, best_cost = None, math.inf
    for ra, rb in itertools.product(ratios, ratios):
        if rb > ra:
            continue
        x = _scale_to_volume([ra, rb, 1.0], v[2])
        w = forward(Semiaxes(*x), spec).as_array()
        cost = float(np.sum(np.log(w / v) ** 2))
        if cost < best_cost:
            best, best_cost = x, cost
    return Semiaxes(*best)


def _residual(x: np.ndarray, logv: np.ndarray, spec: QuadratureSpec):
    w, jac = forward_and_jacobian(Semiaxes(*np.exp(x)), spec)
    r = np.log(w.as_array()) - logv
    # d log V_i / d log a_j = a_j / V_i * dV_i / da_j
    jlog = jac.matrix * np.exp(x)[None, :] / w.as_array()[:, None]
    return r, jlog


def _off_walls(x: np.ndarray, gap: float = 1e-3) -> np.ndarray:
    # on a wall the Jacobian loses rank and Newton cannot leave it
    y = x.copy()
    for i in (1, 2):
        if y[i - 1] - y[i] < gap:
            y[i:] -= gap - (y[i - 1] - y[i])
    return y + (x.sum() - y.sum()) / 3


def _newton(x0, logv, spec: InversionSpec, budget: int):
    """Damped Newton from x0; returns (x, residual, iterations, converged, norms)."""
    qs = spec.quadrature
    x = np.sort(x0)[::-1]
    r, jl = _residual(x, logv, qs)
    if np.max(np.abs(r)) > spec.residual_tol:
        x = _off_walls(x)
        r, jl = _residual(x, logv, qs)
    norms = [float(np.linalg.norm(r))]
    it = 0
    polish = 0
    while it < budget:
        if np.max(np.abs(r)) <= spec.residual_tol:
            if polish >= POLISH_STEPS:
                break
            polish += 1
        step = np.linalg.lstsq(jl, -r, rcond=None)[0]
        size = np.max(np.abs(step))
        if size > TRUST_STEP:
            step *= TRUST_STEP / size
        norm = np.linalg.norm(r)
        lam = 1.0
        for _ in range(MAX_HALVINGS):
            trial = np.sort(x + lam * step)[::-1]
            rt, jt = _residual(trial, logv, qs)
            if np.linalg.norm(rt) < norm:
                break
            lam *= 0.5
        else:
            # no decrease possible: stop at the current iterate
            break
        it += 1
        x, r, jl = trial, rt, jt
        norms.append(float(np.linalg.norm(r)))
    return x, r, it, bool(np.max(np.abs(r)) <= spec.residual_tol), norms


def invert(
    iv: VolumesLike,
    spec: InversionSpec = InversionSpec(),
    start: Optional[Semiaxes] = None,
) -> InversionReport:
    """Canonical semiaxes whose intrinsic volumes match ``iv``.

    ``start`` overrides the default initial guess.  If Newton fails from the
    first start, one restart from the coarse shape grid is attempted.
    """
    v = _as_volumes(iv)
    gate = feasible(v, spec.ball_slack)
    if not gate.ok:
        return InversionReport(None, np.full(3, np.nan), 0, Status.INFEASIBLE,
                               violations=gate.violations)
    logv = np.log(v)
    x0 = np.log((start or initial_guess(v)).as_array())
    x, r, it, ok, norms = _newton(x0, logv, spec, int(spec.max_iterations))
    history = [norms]
    restarts = 0
    if not ok and it < spec.max_iterations:
        restarts = 1
        x0 = np.log(grid_guess(v, spec.quadrature).as_array())
        x, r, more, ok, norms = _newton(x0, logv, spec, int(spec.max_iterations) - it)
        history.append(norms)
        it += more
    status = Status.CONVERGED if ok else Status.NO_CONVERGENCE
    axes = Semiaxes(*np.exp(x)).canonical()
    return InversionReport(axes, np.expm1(r), it, status, restarts, history=history)
