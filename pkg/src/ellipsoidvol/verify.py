"""Numerical witnesses for the uniqueness argument.

* the closed form of the 3x3 kernel determinant and the sign of its
  symmetrized kernel;
* a fixed sign of the determinant of the G matrix on a > b > c;
* the unique critical point of V1 along (t, t, C / t^2);
* the curve V1 = const, V3 = const: one closed loop through six points with
  two equal coordinates, V2 strictly monotone between them.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy.optimize import brentq
from scipy.spatial.distance import directed_hausdorff

from .quadrature import DEFAULT_SPEC, QuadratureSpec
from .volumes import (
    KAPPA,
    SQRT_2PI,
    Semiaxes,
    SemiaxesLike,
    _as_semiaxes,
    forward,
    g_values,
    jacobian,
)

__all__ = [
    "DegenerateStart",
    "CorrectorFailure",
    "GridSpec",
    "DetIdentity",
    "Lemma2Report",
    "LevelCurve",
    "det_identity_eval",
    "kernel_sign",
    "g_matrix",
    "row_scale",
    "lemma2_scan",
    "phi_along_gamma",
    "lemma1_critical_points",
    "lemma1_point",
    "trace_intersection_curve",
    "hausdorff",
]

PAIRS = ((0, 1), (0, 2), (1, 2))
PAIR_NAMES = {(0, 1): "12", (0, 2): "13", (1, 2): "23"}

CORRECTOR_TOL = 1e-13
CORRECTOR_ITERS = 12
MAX_STEP_HALVINGS = 10
CROSSING_TOL = 1e-12


class DegenerateStart(ValueError):
    """The start point is a ball; the level-set intersection is a single point."""


class CorrectorFailure(RuntimeError):
    """Newton correction did not return to the curve even after step halving."""


@dataclass(frozen=True)
class GridSpec:
    lo: float = 0.5
    hi: float = 4.0
    count: int = 200
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.lo < self.hi:
            raise ValueError("need 0 < lo < hi")
        if int(self.count) < 1:
            raise ValueError("count must be at least 1")


@dataclass(frozen=True)
class DetIdentity:
    lhs: float
    rhs: float
    residual: float


def det_identity_eval(s: float, t: float, a: float, b: float, c: float) -> DetIdentity:
    """Compare the kernel determinant with its closed form.

    Rows are (1, 1, 1), 1 / (t^2 + x^2) and 1 / (s^2 + 1 / x^2) for x = a, b, c.
    The closed form is
        -(a^2-b^2)(a^2-c^2)(b^2-c^2)(s^2 t^2 - 1)
        / [(abc)^2 prod(t^2/x^2 + 1) prod(x^2 s^2 + 1)].
    """
    _as_semiaxes((a, b, c))
    x2 = np.array([a, b, c], dtype=float) ** 2
    m = np.array([np.ones(3), 1.0 / (t * t + x2), 1.0 / (s * s + 1.0 / x2)])
    lhs = float(np.linalg.det(m))
    num = -(x2[0] - x2[1]) * (x2[0] - x2[2]) * (x2[1] - x2[2]) * (s * s * t * t - 1.0)
    den = x2.prod() * np.prod(t * t / x2 + 1.0) * np.prod(x2 * s * s + 1.0)
    rhs = float(num / den)
    return DetIdentity(lhs, rhs, abs(lhs - rhs) / max(1.0, abs(lhs)))


def kernel_sign(s, t):
    """((st)^2 - 1)(1 - (st)^5); nonpositive for s, t > 0, zero iff st = 1."""
    st = np.asarray(s, dtype=float) * np.asarray(t, dtype=float)
    out = (st * st - 1.0) * (1.0 - st**5)
    return float(out) if out.ndim == 0 else out


def g_matrix(s: SemiaxesLike, spec: QuadratureSpec = DEFAULT_SPEC) -> np.ndarray:
    """Rows: ones, G at reciprocal axes (permuted), G at the axes (permuted)."""
    primal, dual = g_values(s, spec)
    return np.array([np.ones(3), dual, primal])


def row_scale(m: np.ndarray) -> float:
    return float(np.prod(np.abs(m).max(axis=1)))


@dataclass(frozen=True)
class Lemma2Report:
    sign: int
    min_abs_det: float
    samples: int
    # sign of det of the semiaxes Jacobian of (V1, V2, V3) relative to ``sign``
    jacobian_sign_factor: int = 1
    worst_axes: Optional[Tuple[float, float, float]] = None


def _ordered_samples(grid: GridSpec):
    rng = np.random.default_rng(grid.seed)
    lo, hi = math.log(grid.lo), math.log(grid.hi)
    out = []
    while len(out) < grid.count:
        x = np.sort(np.exp(rng.uniform(lo, hi, 3)))[::-1]
        if x[0] > x[1] > x[2]:
            out.append(x)
    return out


def lemma2_scan(grid: GridSpec = GridSpec(), spec: QuadratureSpec = DEFAULT_SPEC) -> Lemma2Report:
    """Determinant of the G matrix on random strictly ordered triples.

    The reported sign is 0 when two samples disagree or a determinant is
    within 1e-12 (relative to the row scale) of zero.  Passing the row of
    reciprocal G values through the chain rule gives the semiaxes Jacobian
    of (V1, V2, V3) the same sign: the surface row picks up a minus sign
    and the rows appear in reverse order, one more sign change.
    """
    dets = []
    for x in _ordered_samples(grid):
        m = g_matrix(x, spec)
        dets.append((np.linalg.det(m), row_scale(m), tuple(x)))
    signs = {int(np.sign(d)) for d, _, _ in dets}
    tiny = any(abs(d) <= 1e-12 * sc for d, sc, _ in dets)
    worst = min(dets, key=lambda e: abs(e[0]))
    sign = signs.pop() if len(signs) == 1 and not tiny else 0
    return Lemma2Report(sign, float(abs(worst[0])), len(dets), 1, worst[2])


def phi_along_gamma(t: float, C: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """V1 at (t, t, C / t^2)."""
    primal, _ = g_values((t, t, C / t**2), spec)
    return float(SQRT_2PI * primal.sum())


def _dphi(t, C, spec):
    row = jacobian((t, t, C / t**2), spec).matrix[0]
    return float(row[0] + row[1] - 2.0 * C / t**3 * row[2])


def lemma1_critical_points(
    C: float,
    t_range: Tuple[float, float] = None,
    n_samples: int = 200,
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> List[float]:
    """Critical points of t -> V1(t, t, C/t^2) inside ``t_range``.

    ``C`` is the product abc along the curve.  Candidates come from sign
    changes of consecutive differences on a log-uniform sample; each is
    refined by bisection on the analytic derivative.
    """
    if not C > 0:
        raise ValueError("C must be positive")
    t0 = C ** (1.0 / 3.0)
    if t_range is None:
        t_range = (t0 / 10, t0 * 10)
    lo, hi = map(float, t_range)
    if not 0 < lo < t0 < hi:
        raise ValueError(f"t_range {t_range} must contain C^(1/3) = {t0} strictly inside")
    if n_samples < 100:
        raise ValueError("n_samples must be at least 100")
    ts = np.geomspace(lo, hi, n_samples)
    phi = np.array([phi_along_gamma(t, C, spec) for t in ts])
    slope = np.sign(np.diff(phi))
    found = []
    for k in np.nonzero(slope[:-1] * slope[1:] < 0)[0]:
        a, b = ts[k], ts[k + 2]
        fa, fb = _dphi(a, C, spec), _dphi(b, C, spec)
        if fa * fb > 0:
            continue
        while b - a > 1e-12 * b:
            mid = 0.5 * (a + b)
            fm = _dphi(mid, C, spec)
            if fm == 0:
                a = b = mid
                break
            if fa * fm < 0:
                b = mid
            else:
                a, fa = mid, fm
        found.append(0.5 * (a + b))
    return found


def lemma1_point(start: SemiaxesLike, spec: QuadratureSpec = DEFAULT_SPEC, upper: bool = True) -> Semiaxes:
    """The point (u, u, P/u^2) with P = abc and the same V1 as ``start``.

    ``upper`` selects the root with u > P^(1/3) (so the third axis is the
    smallest); otherwise the root with u < P^(1/3).
    """
    s = _as_semiaxes(start)
    if max(s) - min(s) <= 1e-12 * max(s):
        raise DegenerateStart("start is a ball")
    prod = s.a * s.b * s.c
    target = forward(s, spec).v1
    t0 = prod ** (1.0 / 3.0)

    def h(u):
        return phi_along_gamma(u, prod, spec) - target

    if upper:
        lo, hi = t0, 2 * t0
        while h(hi) < 0:
            hi *= 2
    else:
        lo, hi = t0 / 2, t0
        while h(lo) < 0:
            lo /= 2
    u = brentq(h, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    return Semiaxes(u, u, prod / u**2)


@dataclass
class LevelCurve:
    points: np.ndarray
    closed: bool
    symmetric_points: List[Tuple[int, str]]
    v2_profile: np.ndarray
    targets: Tuple[float, float] = (math.nan, math.nan)
    step: float = math.nan
    closure_gap: float = math.nan

    def arcs(self) -> List[Tuple[int, int]]:
        """Index ranges (inclusive) between consecutive symmetric points."""
        idx = [i for i, _ in self.symmetric_points]
        out = list(zip(idx[:-1], idx[1:]))
        if self.closed and idx:
            out.append((idx[-1], len(self.points) - 1))
        return out

    def arc_index(self) -> np.ndarray:
        lab = np.zeros(len(self.points), dtype=int)
        for k, (i, j) in enumerate(self.arcs()):
            lab[i:j + 1] = k
        return lab

    def arc_monotone(self) -> List[bool]:
        out = []
        for i, j in self.arcs():
            d = np.diff(self.v2_profile[i:j + 1])
            out.append(bool((d > 0).all() or (d < 0).all()))
        return out

    def to_csv(self, path) -> None:
        lab = self.arc_index()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["a", "b", "c", "v2", "arc_index"])
            for p, v, k in zip(self.points, self.v2_profile, lab):
                w.writerow([f"{p[0]:.17g}", f"{p[1]:.17g}", f"{p[2]:.17g}", f"{v:.17g}", int(k)])


def _level_system(x, logt, spec):
    """Log-residuals of (V1, V3) and their gradients at x."""
    primal, _ = g_values(Semiaxes(*x), spec)
    w1 = SQRT_2PI * primal.sum()
    w3 = KAPPA[3] * np.prod(x)
    res = np.array([math.log(w1) - logt[0], math.log(w3) - logt[1]])
    grad = np.array([SQRT_2PI * primal / x / w1, 1.0 / x])
    return res, grad


def _tangent(grad, prev=None):
    t = np.cross(grad[0], grad[1])
    t /= np.linalg.norm(t)
    if prev is not None and t @ prev < 0:
        t = -t
    return t


def _correct(y, tangent, logt, spec):
    """Newton onto the curve inside the plane through y orthogonal to tangent."""
    basis = np.linalg.svd(tangent[None, :])[2][1:]
    for _ in range(CORRECTOR_ITERS):
        if (y <= 0).any():
            break
        res, grad = _level_system(y, logt, spec)
        if np.max(np.abs(res)) <= CORRECTOR_TOL:
            return y, grad
        alpha = np.linalg.solve(grad @ basis.T, -res)
        y = y + alpha @ basis
    raise CorrectorFailure("corrector did not converge")


def trace_intersection_curve(
    start: SemiaxesLike,
    step: float = 0.01,
    max_steps: int = 100000,
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> LevelCurve:
    """Trace {V1 = V1(start)} intersected with {V3 = V3(start)}.

    Tracing begins at the point with a = b > c on the curve and follows the
    tangent grad V1 x grad V3 with predictor-corrector continuation until it
    comes back to the beginning.  Crossings of the planes x_i = x_j are
    refined by bisection and inserted into the polyline.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    s = _as_semiaxes(start)
    if max(s) - min(s) <= 1e-12 * max(s):
        raise DegenerateStart("start is a ball: the level curve degenerates to a point")
    w = forward(s, spec)
    logt = np.log([w.v1, w.v3])
    scale = max(s)

    p0 = lemma1_point(s, spec).as_array()
    _, grad = _level_system(p0, logt, spec)
    tang = _tangent(grad)
    points = [p0]
    sym = [(0, "12")]
    x = p0
    left_start = False
    closed = False
    gap = math.nan

    for _ in range(max_steps):
        d = p0 - x
        dist = np.linalg.norm(d)
        if dist > 2 * step:
            left_start = True
        if left_start and dist <= 1.5 * step and d @ tang > 0:
            y, _ = _correct(x + (d @ tang) * tang, tang, logt, spec)
            gap = float(np.linalg.norm(y - p0))
            points.append(y)
            closed = gap <= 1e-6 * scale
            break

        h = step
        for _ in range(MAX_STEP_HALVINGS + 1):
            try:
                y, grad = _correct(x + h * tang, tang, logt, spec)
                break
            except (CorrectorFailure, np.linalg.LinAlgError, ValueError):
                h *= 0.5
        else:
            raise CorrectorFailure(f"corrector failed at {x} after {MAX_STEP_HALVINGS} step halvings")

        crossings = []
        for i, j in PAIRS:
            g0, g1 = x[i] - x[j], y[i] - y[j]
            if g0 * g1 < 0:
                crossings.append((_refine_crossing(x, tang, h, i, j, logt, spec), i, j))
        for (tau, c), i, j in sorted(crossings, key=lambda e: e[0][0]):
            if tau < 1e-3 * h and len(points) - 1 != sym[-1][0]:
                points.pop()
            points.append(c)
            sym.append((len(points) - 1, PAIR_NAMES[(i, j)]))
        if crossings and h - max(e[0][0] for e in crossings) < 1e-3 * h:
            # the new point would nearly duplicate a symmetric point
            x = points[-1]
            _, grad = _level_system(x, logt, spec)
        else:
            points.append(y)
            x = y
        tang = _tangent(grad, tang)

    pts = np.array(points)
    v2 = np.array([forward(Semiaxes(*p), spec).v2 for p in pts])
    return LevelCurve(pts, closed, sym, v2, (float(w.v1), float(w.v3)), step, gap)


def _refine_crossing(x, tang, h, i, j, logt, spec):
    """Bisection on x_i - x_j along the corrected predictor path."""
    lo, hi = 0.0, h
    glo = x[i] - x[j]
    point = x
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        point, _ = _correct(x + mid * tang, tang, logt, spec)
        g = point[i] - point[j]
        if abs(g) <= CROSSING_TOL * abs(point[i]) or hi - lo <= 1e-16 * h:
            break
        if g * glo > 0:
            lo, glo = mid, g
        else:
            hi = mid
    return mid, point


def hausdorff(p: np.ndarray, q: np.ndarray) -> float:
    return max(directed_hausdorff(p, q)[0], directed_hausdorff(q, p)[0])
