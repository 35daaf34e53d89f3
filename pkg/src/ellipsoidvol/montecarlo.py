"""Seeded Monte Carlo estimators for intrinsic volumes.

Every estimator draws from ``spec.streams`` independent substreams derived
from ``spec.seed`` with ``numpy.random.SeedSequence`` spawn keys.  Stream
statistics are merged in stream order, so the result depends only on
``(seed, samples, streams)`` and never on how many threads ran the streams.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .quadrature import DEFAULT_SPEC, QuadratureSpec
from .volumes import KAPPA, Semiaxes, SemiaxesLike, _as_semiaxes, forward, kappa

__all__ = [
    "McSpec",
    "McEstimate",
    "SemiaxesN",
    "SteinerCheck",
    "mc_tsirelson",
    "mc_mean_width",
    "kubota_constant",
    "kubota_estimate",
    "dist_point_ellipsoid",
    "steiner_polynomial",
    "steiner_volume_check",
]

_CHUNK = 1 << 17
THREADS_ENV = "ELLIPSOIDVOL_THREADS"


@dataclass(frozen=True)
class McSpec:
    samples: int
    seed: int = 0
    streams: int = 1

    def __post_init__(self):
        if int(self.samples) < 1:
            raise ValueError("samples must be at least 1")
        if int(self.streams) < 1:
            raise ValueError("streams must be at least 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    samples: int

    def z_score(self, value: float) -> float:
        """Distance from ``value`` in standard errors."""
        diff = abs(self.mean - value)
        if self.std_error == 0:
            return 0.0 if diff == 0 else math.inf
        return diff / self.std_error

    def agrees(self, value: float, k: float = 4.0) -> bool:
        return self.z_score(value) <= k


@dataclass(frozen=True)
class SemiaxesN:
    axes: tuple

    def __post_init__(self):
        axes = tuple(float(x) for x in self.axes)
        if not axes:
            raise ValueError("need at least one semiaxis")
        if not all(math.isfinite(x) and x > 0 for x in axes):
            raise ValueError(f"semiaxes must be finite and positive, got {axes}")
        object.__setattr__(self, "axes", axes)

    @property
    def n(self) -> int:
        return len(self.axes)


def _workers() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _stream_counts(spec: McSpec):
    base, extra = divmod(int(spec.samples), int(spec.streams))
    return [base + (i < extra) for i in range(int(spec.streams))]


def _merge(acc, n, mean, m2):
    # Chan et al. pairwise update of (count, mean, sum of squared deviations)
    n0, mean0, m20 = acc
    if n0 == 0:
        return n, mean, m2
    tot = n0 + n
    delta = mean - mean0
    return tot, mean0 + delta * n / tot, m20 + m2 + delta * delta * n0 * n / tot


def _run_stream(sampler, seed, index, count):
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))
    acc = (0, 0.0, 0.0)
    left = count
    while left > 0:
        k = min(left, _CHUNK)
        x = np.asarray(sampler(rng, k), dtype=float)
        mu = float(x.mean())
        acc = _merge(acc, k, mu, float(((x - mu) ** 2).sum()))
        left -= k
    return acc


def _estimate(sampler: Callable[[np.random.Generator, int], np.ndarray], spec: McSpec) -> McEstimate:
    counts = _stream_counts(spec)
    jobs = [(i, c) for i, c in enumerate(counts) if c > 0]
    workers = min(_workers(), len(jobs))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda j: _run_stream(sampler, spec.seed, *j), jobs))
    else:
        parts = [_run_stream(sampler, spec.seed, *j) for j in jobs]
    acc = (0, 0.0, 0.0)
    for part in parts:
        acc = _merge(acc, *part)
    n, mean, m2 = acc
    var = m2 / (n - 1) if n > 1 else 0.0
    return McEstimate(mean, math.sqrt(var / n), n)


def _as_axes_n(s) -> SemiaxesN:
    if isinstance(s, SemiaxesN):
        return s
    if isinstance(s, Semiaxes):
        return SemiaxesN(tuple(s))
    return SemiaxesN(tuple(s))


def mc_tsirelson(s: Union[SemiaxesN, Sequence[float]], m: int, spec: McSpec) -> McEstimate:
    """Estimate V_m of an n-dimensional ellipsoid from random Gaussian matrices.

    V_m = (2 pi)^(m/2) / m! * E sqrt(det(M M^T)) with M an m x n matrix whose rows
    are N(0, diag(axes^2)).  The m-volume of the rows is read off the R factor
    of a QR decomposition of M^T.
    """
    s = _as_axes_n(s)
    if not 1 <= m <= s.n:
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={s.n}")
    axes = np.array(s.axes)
    factor = (2 * math.pi) ** (m / 2) / math.factorial(m)

    def sampler(rng, k):
        mt = rng.standard_normal((k, s.n, m)) * axes[None, :, None]
        r = np.linalg.qr(mt, mode="r")
        return factor * np.abs(np.diagonal(r, axis1=1, axis2=2).prod(axis=1))

    return _estimate(sampler, spec)


def mc_mean_width(s: SemiaxesLike, spec: McSpec) -> McEstimate:
    """V1 = sqrt(2 pi) E sqrt(a^2 x^2 + b^2 y^2 + c^2 z^2) by plain Gaussian sampling."""
    axes = _as_semiaxes(s).as_array()

    def sampler(rng, k):
        g = rng.standard_normal((k, 3)) * axes
        return math.sqrt(2 * math.pi) * np.sqrt((g * g).sum(axis=1))

    return _estimate(sampler, spec)


def _unit_vectors(rng, k):
    g = rng.standard_normal((k, 3))
    return g / np.linalg.norm(g, axis=1)[:, None]


def kubota_constant(n: int, k: int) -> float:
    return math.comb(n, k) * kappa(n) / (kappa(k) * kappa(n - k))


def kubota_estimate(s: SemiaxesLike, k: int, spec: McSpec) -> McEstimate:
    """Average projection volume estimator for V1 (k=1) or V2 (k=2).

    k=1 projects onto a random line (segment of length 2 h(u)); k=2 projects
    onto the plane with a random unit normal (ellipse of area
    pi abc sqrt(n1^2/a^2 + n2^2/b^2 + n3^2/c^2)).
    """
    if k not in (1, 2):
        raise ValueError(f"k must be 1 or 2, got {k}")
    s = _as_semiaxes(s)
    axes = s.as_array()
    const = kubota_constant(3, k)
    abc = s.a * s.b * s.c

    if k == 1:
        def sampler(rng, n):
            u = _unit_vectors(rng, n)
            return const * 2.0 * np.sqrt(((axes * u) ** 2).sum(axis=1))
    else:
        def sampler(rng, n):
            u = _unit_vectors(rng, n)
            return const * math.pi * abc * np.sqrt(((u / axes) ** 2).sum(axis=1))

    return _estimate(sampler, spec)


def dist_point_ellipsoid(p, s: SemiaxesLike):
    """Euclidean distance from ``p`` (shape (3,) or (N, 3)) to the solid ellipsoid.

    For exterior points the nearest boundary point is
    q_i = a_i^2 p_i / (a_i^2 + lam) with lam > 0 the root of
    sum_i (a_i p_i / (a_i^2 + lam))^2 = 1.  That function is convex and
    decreasing in lam, so Newton's method started at lam = 0 increases
    monotonically to the root; it is clipped to a bracket as a safeguard.
    """
    axes = _as_semiaxes(s).as_array()
    pts = np.asarray(p, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if not np.isfinite(pts).all():
        raise ValueError("points must be finite")
    a2 = axes * axes
    out = np.zeros(len(pts))
    outside = ((pts * pts) / a2).sum(axis=1) > 1.0
    q = pts[outside]
    if len(q):
        ap = axes * q
        hi = np.sqrt((ap * ap).sum(axis=1))
        lam = np.zeros(len(q))
        for _ in range(200):
            r = ap / (a2 + lam[:, None])
            f = (r * r).sum(axis=1) - 1.0
            df = -2.0 * (r * r / (a2 + lam[:, None])).sum(axis=1)
            new = np.clip(lam - f / df, lam, hi)
            if np.all(np.abs(new - lam) <= 1e-15 * np.maximum(new, 1.0)):
                lam = new
                break
            lam = new
        near = a2 * q / (a2 + lam[:, None])
        out[outside] = np.linalg.norm(q - near, axis=1)
    return float(out[0]) if single else out


def steiner_polynomial(s: SemiaxesLike, t: float, qspec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Vol(E + tB) = sum_k kappa_{3-k} V_k t^{3-k} with V_0 = 1."""
    w = forward(s, qspec)
    return w.v3 + KAPPA[1] * w.v2 * t + KAPPA[2] * w.v1 * t**2 + KAPPA[3] * t**3


@dataclass(frozen=True)
class SteinerCheck:
    mc: McEstimate
    polynomial: float


def steiner_volume_check(s: SemiaxesLike, t: float, spec: McSpec,
                         qspec: QuadratureSpec = DEFAULT_SPEC) -> SteinerCheck:
    """Hit-or-miss volume of E + tB in its bounding box next to the Steiner polynomial."""
    if not t > 0:
        raise ValueError("t must be positive")
    s = _as_semiaxes(s)
    half = s.as_array() + t
    box = float(np.prod(2 * half))

    def sampler(rng, k):
        pts = rng.uniform(-half, half, size=(k, 3))
        return box * (dist_point_ellipsoid(pts, s) <= t)

    return SteinerCheck(_estimate(sampler, spec), steiner_polynomial(s, t, qspec))
