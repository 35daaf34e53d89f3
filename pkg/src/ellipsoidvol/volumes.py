"""Intrinsic volumes of 3-D ellipsoids and their derivatives.

Everything goes through one auxiliary function

    G(a, b, c) = E[a^2 x^2 / sqrt(a^2 x^2 + b^2 y^2 + c^2 z^2)],  x, y, z ~ N(0, 1),

which has the one-dimensional representation

    G(a, b, c) = (2 pi)^(-1/2) * int_R a^2 / (a^2 s^2 + 1) / sqrt(P(s)) ds,
    P(s) = (a^2 s^2 + 1)(b^2 s^2 + 1)(c^2 s^2 + 1).

The mean width functional is sqrt(2 pi) times the sum of G over the three
axes, the surface functional follows from the dual ellipsoid with reciprocal
semiaxes, and the partial derivatives are again values of G.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from .quadrature import DEFAULT_SPEC, QuadratureSpec, integrate_line

__all__ = [
    "KAPPA",
    "G_PREFACTOR",
    "ASPECT_WARN",
    "Semiaxes",
    "LogSemiaxes",
    "IntrinsicVolumes",
    "Jacobian3",
    "kappa",
    "ball_v1_bound",
    "g_value",
    "g_values",
    "v1",
    "v2",
    "v3",
    "forward",
    "jacobian",
    "jacobian_log",
    "forward_and_jacobian",
]

# volumes of the unit balls B_0 .. B_3
KAPPA = (1.0, 2.0, math.pi, 4.0 * math.pi / 3.0)

# fixed against G(1, 1, 1) = E|N(0, I_3)| / 3 = 2 sqrt(2) / (3 sqrt(pi))
G_PREFACTOR = 1.0 / math.sqrt(2.0 * math.pi)

SQRT_2PI = math.sqrt(2.0 * math.pi)

# beyond this max/min axis ratio results are flagged as reduced accuracy
ASPECT_WARN = 1e6


def kappa(k: int) -> float:
    """Volume of the k-dimensional unit ball."""
    return math.pi ** (k / 2) / math.gamma(k / 2 + 1)


def _check_positive(values):
    for v in values:
        if not (math.isfinite(v) and v > 0):
            raise ValueError(f"semiaxes must be finite and positive, got {tuple(values)}")


@dataclass(frozen=True)
class Semiaxes:
    a: float
    b: float
    c: float

    def __post_init__(self):
        for name in ("a", "b", "c"):
            object.__setattr__(self, name, float(getattr(self, name)))
        _check_positive((self.a, self.b, self.c))

    def __iter__(self):
        return iter((self.a, self.b, self.c))

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c], dtype=float)

    def canonical(self) -> "Semiaxes":
        """The same ellipsoid with a >= b >= c."""
        return Semiaxes(*sorted((self.a, self.b, self.c), reverse=True))

    def log(self) -> "LogSemiaxes":
        return LogSemiaxes(math.log(self.a), math.log(self.b), math.log(self.c))

    def aspect(self) -> float:
        return max(self) / min(self)


@dataclass(frozen=True)
class LogSemiaxes:
    la: float
    lb: float
    lc: float

    def __post_init__(self):
        for name in ("la", "lb", "lc"):
            object.__setattr__(self, name, float(getattr(self, name)))
        _check_positive([math.exp(x) for x in (self.la, self.lb, self.lc)])

    def __iter__(self):
        return iter((self.la, self.lb, self.lc))

    def exp(self) -> Semiaxes:
        return Semiaxes(math.exp(self.la), math.exp(self.lb), math.exp(self.lc))


@dataclass(frozen=True)
class IntrinsicVolumes:
    v1: float
    v2: float
    v3: float
    reduced_accuracy: bool = False

    def __iter__(self):
        return iter((self.v1, self.v2, self.v3))

    def as_array(self) -> np.ndarray:
        return np.array([self.v1, self.v2, self.v3], dtype=float)


@dataclass(frozen=True)
class Jacobian3:
    """3x3 derivative matrix.

    ``coords == "semiaxes"``: rows are dV1, dV2, dV3 with respect to (a, b, c).
    ``coords == "log"``: rows are the derivatives of the normalized functionals
    (volume, surface ratio, mean width) with respect to (log a, log b, log c).
    """

    matrix: np.ndarray
    coords: str
    reduced_accuracy: bool = False

    def det(self) -> float:
        return float(np.linalg.det(self.matrix))


SemiaxesLike = Union[Semiaxes, Sequence[float]]


def _as_semiaxes(s: SemiaxesLike) -> Semiaxes:
    return s if isinstance(s, Semiaxes) else Semiaxes(*map(float, s))


def ball_v1_bound(v3: float) -> float:
    """Smallest mean width functional an ellipsoid of volume ``v3`` can have."""
    return (48.0 * v3 / math.pi) ** (1.0 / 3.0)


def _unit_g(u: np.ndarray, spec: QuadratureSpec) -> np.ndarray:
    """G(u_j, others) for j = 0, 1, 2 and the same for 1/u, as a (6,) array."""
    sq = np.concatenate([u * u, 1.0 / (u * u)])[:, None]

    def f(s):
        s2 = s * s
        terms = sq * s2 + 1.0
        prod = np.sqrt(
            np.stack([terms[0] * terms[1] * terms[2], terms[3] * terms[4] * terms[5]])
        )
        return sq / terms / np.repeat(prod, 3, axis=0)

    return G_PREFACTOR * integrate_line(f, spec, even=True).value


def g_values(s: SemiaxesLike, spec: QuadratureSpec = DEFAULT_SPEC):
    """All six G values needed for the forward map and its Jacobian.

    Returns ``(primal, dual)`` where ``primal[j] = G(x_j, x_k, x_l)`` and
    ``dual[j] = G(1/x_j, 1/x_k, 1/x_l)``.
    """
    s = _as_semiaxes(s)
    x = s.as_array()
    order = np.argsort(-x, kind="stable")
    xs = x[order]
    scale = math.exp(np.log(xs).mean())
    raw = _unit_g(xs / scale, spec)
    primal = np.empty(3)
    dual = np.empty(3)
    primal[order] = scale * raw[:3]
    dual[order] = raw[3:] / scale
    return primal, dual


def g_value(a: float, b: float, c: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """G(a, b, c); symmetric in its last two arguments."""
    primal, _ = g_values((a, b, c), spec)
    return float(primal[0])


def v3(s: SemiaxesLike) -> float:
    s = _as_semiaxes(s)
    return KAPPA[3] * s.a * s.b * s.c


def _assemble(s: Semiaxes, primal, dual):
    w1 = float(SQRT_2PI * primal.sum())
    abc = s.a * s.b * s.c
    w2 = float(0.5 * math.pi * abc * SQRT_2PI * dual.sum())
    return w1, w2, KAPPA[3] * abc


def v1(s: SemiaxesLike, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    primal, _ = g_values(s, spec)
    return float(SQRT_2PI * primal.sum())


def v2(s: SemiaxesLike, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    s = _as_semiaxes(s)
    _, dual = g_values(s, spec)
    return float(0.5 * math.pi * s.a * s.b * s.c * SQRT_2PI * dual.sum())


def forward(s: SemiaxesLike, spec: QuadratureSpec = DEFAULT_SPEC) -> IntrinsicVolumes:
    """(V1, V2, V3) of the ellipsoid with semiaxes ``s``."""
    s = _as_semiaxes(s)
    primal, dual = g_values(s, spec)
    return IntrinsicVolumes(*_assemble(s, primal, dual), s.aspect() > ASPECT_WARN)


def _semiaxes_matrix(s: Semiaxes, primal, dual, w1, w2, w3):
    x = s.as_array()
    abc = s.a * s.b * s.c
    row1 = SQRT_2PI * primal / x
    # d/dx_j of (pi/2) abc V1(1/x) = V2/x_j - (pi/2)(abc/x_j) sqrt(2pi) G(1/x_j, ...)
    row2 = (w2 - 0.5 * math.pi * abc * SQRT_2PI * dual) / x
    row3 = w3 / x
    return np.array([row1, row2, row3])


def forward_and_jacobian(s: SemiaxesLike, spec: QuadratureSpec = DEFAULT_SPEC):
    """Forward values and the semiaxes Jacobian from a single quadrature."""
    s = _as_semiaxes(s)
    primal, dual = g_values(s, spec)
    w = _assemble(s, primal, dual)
    flag = s.aspect() > ASPECT_WARN
    return (
        IntrinsicVolumes(*w, flag),
        Jacobian3(_semiaxes_matrix(s, primal, dual, *w), "semiaxes", flag),
    )


def jacobian(s: SemiaxesLike, spec: QuadratureSpec = DEFAULT_SPEC) -> Jacobian3:
    """m[i][j] = dV_{i+1} / d(semiaxis j)."""
    return forward_and_jacobian(s, spec)[1]


def jacobian_log(p: Union[LogSemiaxes, Iterable[float]], spec: QuadratureSpec = DEFAULT_SPEC) -> Jacobian3:
    """Jacobian of the normalized functionals in log-semiaxis coordinates.

    Rows, top to bottom, differentiate

        exp(la + lb + lc)                                   (volume / kappa_3)
        E sqrt(e^{-2la} x^2 + e^{-2lb} y^2 + e^{-2lc} z^2)  (dual mean width)
        E sqrt(e^{2la} x^2 + e^{2lb} y^2 + e^{2lc} z^2)     (mean width / sqrt(2 pi))

    The middle row is minus the G values at the reciprocal semiaxes.  The
    all-positive variant used in nondegeneracy arguments differs from this
    matrix only by that row's sign, so the determinants have opposite signs.
    """
    if not isinstance(p, LogSemiaxes):
        p = LogSemiaxes(*map(float, p))
    s = p.exp()
    primal, dual = g_values(s, spec)
    row1 = math.exp(p.la + p.lb + p.lc) * np.ones(3)
    return Jacobian3(np.array([row1, -dual, primal]), "log", s.aspect() > ASPECT_WARN)
