"""Hermite functions, Gauss-Hermite quadrature and coefficient analysis/synthesis.

Hermite functions are L^2-normalized,

    h_0(x) = pi^(-1/4) exp(-x^2/2),
    h_{n+1}(x) = sqrt(2/(n+1)) x h_n(x) - sqrt(n/(n+1)) h_{n-1}(x),

and ``h_alpha(x) = prod_k h_{alpha_k}(x_k)`` on R^d.  They are the eigenfunctions
of the harmonic oscillator ``H = |x|^2 - Laplacian`` with eigenvalues
``2|alpha| + d``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .multiindex import GradedIndexMap, count

PI_QUARTER = math.pi ** -0.25
MAX_ORDER = 256


class AnalysisError(ValueError):
    pass


@dataclass(frozen=True)
class CoeffVector:
    """Hermite coefficients of a function on R^d, graded-lex order, |alpha| <= N."""

    d: int
    N: int
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.size != count(self.d, self.N):
            raise ValueError(f"expected {count(self.d, self.N)} coefficients for d={self.d}, N={self.N}, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("coefficients must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def index_map(self) -> GradedIndexMap:
        return GradedIndexMap(self.d, self.N)

    @classmethod
    def zeros(cls, d: int, N: int) -> "CoeffVector":
        return cls(d, N, np.zeros(count(d, N)))

    @classmethod
    def unit(cls, d: int, N: int, alpha) -> "CoeffVector":
        v = np.zeros(count(d, N))
        v[GradedIndexMap(d, N).rank(alpha)] = 1.0
        return cls(d, N, v)

    def padded(self, N: int) -> "CoeffVector":
        """The same function viewed in a larger truncation (zeros appended)."""
        if N < self.N:
            raise ValueError("padding cannot shrink a truncation")
        v = np.zeros(count(self.d, N))
        v[: self.values.size] = self.values
        return CoeffVector(self.d, N, v)


def hermite_table(N: int, x) -> np.ndarray:
    """Array of shape (N+1, *x.shape) holding h_0(x), ..., h_N(x)."""
    x = np.asarray(x, dtype=float)
    out = np.empty((N + 1,) + x.shape)
    out[0] = PI_QUARTER * np.exp(-0.5 * x * x)
    if N >= 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for n in range(1, N):
        out[n + 1] = math.sqrt(2.0 / (n + 1)) * x * out[n] - math.sqrt(n / (n + 1)) * out[n - 1]
    return out


def hermite_eval(n: int, x):
    """Orthonormal Hermite function h_n at x (scalar or array)."""
    if n < 0:
        raise ValueError("Hermite degree must be non-negative")
    val = hermite_table(n, x)[n]
    return float(val) if np.ndim(val) == 0 else val


@dataclass(frozen=True)
class QuadratureRule:
    """M-point Gauss-Hermite rule for integrals of p(x) exp(-x^2).

    ``scaled_weights`` are ``weights * exp(nodes^2)``, the rule for plain
    integrals of f(x) dx; they are computed directly so that no exp(x^2)
    factor is ever formed.
    """

    order: int
    nodes: np.ndarray
    weights: np.ndarray
    scaled_weights: np.ndarray

    def integrate(self, f: Callable) -> float:
        """Approximate the integral of f(x) exp(-x^2)."""
        return float(np.dot(self.weights, f(self.nodes)))


def gauss_hermite(M: int) -> QuadratureRule:
    """Nodes are Golub-Welsch eigenvalues polished by Newton steps on h_M."""
    if int(M) != M or not 1 <= M <= MAX_ORDER:
        raise ValueError(f"quadrature order must be an integer in [1, {MAX_ORDER}], got {M!r}")
    M = int(M)
    if M == 1:
        x = np.zeros(1)
    else:
        off = np.sqrt(np.arange(1, M) / 2.0)
        x = eigh_tridiagonal(np.zeros(M), off, eigvals_only=True)
        for _ in range(3):
            h = hermite_table(M, x)
            # h_M' = sqrt(2M) h_{M-1} - x h_M
            step = h[M] / (math.sqrt(2.0 * M) * h[M - 1] - x * h[M])
            x = x - step
            if np.max(np.abs(step)) < 1e-15:
                break
        x = 0.5 * (x - x[::-1])
    hm1 = hermite_table(M - 1, x)[M - 1]
    scaled = 1.0 / (M * hm1**2)
    w = np.exp(-x * x) * scaled
    for a in (x, w, scaled):
        a.setflags(write=False)
    return QuadratureRule(M, x, w, scaled)


def _product_grid(rule: QuadratureRule, d: int) -> list[np.ndarray]:
    grids = np.meshgrid(*([rule.nodes] * d), indexing="ij")
    return [g.ravel() for g in grids]


def analyze(f: Callable, d: int, N: int, M: int | None = None) -> CoeffVector:
    """Hermite coefficients c_alpha = int f h_alpha, |alpha| <= N, by tensor quadrature.

    ``f`` is called once as ``f(x_1, ..., x_d)`` with flat arrays of the
    product-grid coordinates.  The default order M = 2N + 8 leaves a margin
    for functions that are not exactly polynomial times exp(-|x|^2/2).
    """
    if d < 1 or d > 3:
        raise ValueError("analysis supports 1 <= d <= 3")
    M = 2 * N + 8 if M is None else M
    if M < N + 1:
        raise ValueError(f"quadrature order M={M} must be at least N+1={N + 1}")
    rule = gauss_hermite(M)
    coords = _product_grid(rule, d)
    vals = np.asarray(f(*coords), dtype=float)
    if vals.shape != coords[0].shape:
        vals = np.broadcast_to(vals, coords[0].shape)
    bad = ~np.isfinite(vals)
    if np.any(bad):
        k = int(np.argmax(bad))
        raise AnalysisError(f"function value is not finite at node {tuple(float(c[k]) for c in coords)}")
    # B[n, i] = W_i h_n(x_i); contract one axis at a time, in fixed order
    B = hermite_table(N, rule.nodes) * rule.scaled_weights[None, :]
    F = vals.reshape((M,) * d)
    for axis in range(d):
        F = np.tensordot(B, F, axes=([1], [axis]))
        F = np.moveaxis(F, 0, axis)
    idx = GradedIndexMap(d, N).indices
    return CoeffVector(d, N, F[tuple(idx.T)])


def basis_values(d: int, N: int, points) -> np.ndarray:
    """Matrix of h_alpha(x_p): shape (n_points, count(d, N))."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != d:
        pts = pts.reshape(-1, d)
    idx = GradedIndexMap(d, N).indices
    out = np.ones((pts.shape[0], idx.shape[0]))
    for k in range(d):
        tab = hermite_table(N, pts[:, k])  # (N+1, P)
        out *= tab[idx[:, k]].T
    return out


def synthesize(c: CoeffVector, x):
    """Evaluate sum_alpha c_alpha h_alpha(x) at one point or an array of points."""
    x = np.asarray(x, dtype=float)
    single = x.ndim <= 1 and (c.d > 1 or x.ndim == 0)
    pts = x.reshape(-1, c.d)
    out = basis_values(c.d, c.N, pts) @ c.values
    return float(out[0]) if single else out


def oscillator_eigenvalues(d: int, N: int) -> np.ndarray:
    """2|alpha| + d for each alpha in graded-lex order."""
    return 2.0 * GradedIndexMap(d, N).degrees + d


def apply_harmonic_oscillator(c: CoeffVector, power: int) -> CoeffVector:
    """Coefficients of H^power f: each c_alpha times (2|alpha| + d)^power."""
    if int(power) != power or power < 0:
        raise ValueError("power must be a non-negative integer")
    ev = oscillator_eigenvalues(c.d, c.N)
    if power * math.log(ev.max()) > math.log(np.finfo(float).max):
        raise OverflowError(f"(2|alpha|+d)^{power} overflows for |alpha| = {c.N}")
    return CoeffVector(c.d, c.N, c.values * ev**power)
