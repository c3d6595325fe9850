"""Truncated Hermite-coefficient kernels and their operator algebra.

A kernel ``K(x, y) = sum a_{alpha,beta} h_alpha(x) h_beta(y)`` of an operator
from functions on R^d1 to functions on R^d2 is stored as the dense matrix
``(a_{alpha,beta})``: rows are output multi-indices alpha in N^d2 with
``|alpha| <= N2``, columns are input multi-indices beta in N^d1 with
``|beta| <= N1``, both in graded-lex order.  In these coordinates the operator
acts by matrix-vector product and composition of operators is the matrix
product.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .hermite import CoeffVector
from .jacobi import jacobi_eigh
from .multiindex import GradedIndexMap, count
from .weights import WeightSpec


class ShapeError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class KernelMatrix:
    d1: int
    d2: int
    N1: int
    N2: int
    entries: np.ndarray

    def __post_init__(self):
        A = np.array(self.entries, dtype=float)
        shape = (count(self.d2, self.N2), count(self.d1, self.N1))
        if A.shape != shape:
            raise ShapeError(f"entries have shape {A.shape}, expected {shape} for "
                             f"d1={self.d1}, d2={self.d2}, N1={self.N1}, N2={self.N2}")
        if not np.all(np.isfinite(A)):
            raise ValueError("kernel entries must be finite")
        A.setflags(write=False)
        object.__setattr__(self, "entries", A)

    @property
    def in_map(self) -> GradedIndexMap:
        return GradedIndexMap(self.d1, self.N1)

    @property
    def out_map(self) -> GradedIndexMap:
        return GradedIndexMap(self.d2, self.N2)

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    @property
    def is_square(self) -> bool:
        return self.d1 == self.d2 and self.N1 == self.N2

    def with_entries(self, entries) -> "KernelMatrix":
        return KernelMatrix(self.d1, self.d2, self.N1, self.N2, entries)

    def scaled(self, lam: float) -> "KernelMatrix":
        return self.with_entries(lam * self.entries)

    def __repr__(self) -> str:
        return f"KernelMatrix(d1={self.d1}, d2={self.d2}, N1={self.N1}, N2={self.N2})"

    # constructors ----------------------------------------------------------

    @classmethod
    def identity(cls, d: int, N: int) -> "KernelMatrix":
        return cls(d, d, N, N, np.eye(count(d, N)))

    @classmethod
    def diagonal(cls, d: int, N: int, diag) -> "KernelMatrix":
        diag = np.asarray(diag, dtype=float)
        return cls(d, d, N, N, np.diag(diag))

    @classmethod
    def zeros(cls, d1: int, d2: int, N1: int, N2: int) -> "KernelMatrix":
        return cls(d1, d2, N1, N2, np.zeros((count(d2, N2), count(d1, N1))))


def frobenius_relative(A: KernelMatrix, B: KernelMatrix) -> float:
    """||A - B||_F / ||B||_F (absolute difference when B is zero)."""
    if A.shape != B.shape:
        raise ShapeError(f"shapes {A.shape} and {B.shape} differ")
    diff = np.linalg.norm(A.entries - B.entries)
    ref = np.linalg.norm(B.entries)
    return float(diff / ref) if ref > 0 else float(diff)


def apply(K: KernelMatrix, f: CoeffVector) -> CoeffVector:
    """Coefficients of T f: g_alpha = sum_beta a_{alpha,beta} f_beta."""
    if f.d != K.d1:
        raise ShapeError(f"input has dimension {f.d}, kernel expects {K.d1}")
    if f.N > K.N1:
        raise ShapeError(f"input truncation {f.N} exceeds kernel input truncation {K.N1}")
    if f.N < K.N1:
        f = f.padded(K.N1)
    return CoeffVector(K.d2, K.N2, K.entries @ f.values)


def _diag_or_none(A: np.ndarray):
    if A.shape[0] == A.shape[1] and np.count_nonzero(A - np.diag(np.diag(A))) == 0:
        return np.diag(A)
    return None


def compose(K2: KernelMatrix, K1: KernelMatrix) -> KernelMatrix:
    """Kernel of T2 o T1 (apply K1 first)."""
    if (K1.d2, K1.N2) != (K2.d1, K2.N1):
        raise ShapeError(f"cannot compose: K1 maps into (d={K1.d2}, N={K1.N2}), "
                         f"K2 expects (d={K2.d1}, N={K2.N1})")
    d1 = _diag_or_none(K1.entries)
    d2 = _diag_or_none(K2.entries)
    if d1 is not None and d2 is not None:
        prod = np.diag(d2 * d1)
    elif d1 is not None:
        prod = K2.entries * d1[None, :]
    elif d2 is not None:
        prod = d2[:, None] * K1.entries
    else:
        prod = K2.entries @ K1.entries
    return KernelMatrix(K1.d1, K2.d2, K1.N1, K2.N2, prod)


def compose_all(*kernels: KernelMatrix) -> KernelMatrix:
    """compose_all(Kn, ..., K1) = Kn o ... o K1."""
    out = kernels[-1]
    for K in reversed(kernels[:-1]):
        out = compose(K, out)
    return out


def adjoint(K: KernelMatrix) -> KernelMatrix:
    return KernelMatrix(K.d2, K.d1, K.N2, K.N1, K.entries.T)


def tensor_with(K0: KernelMatrix, g: CoeffVector) -> KernelMatrix:
    """Kernel of f -> (T0 f) (x) g.

    The output variable becomes (x, z) in R^(d2 + dg) with truncation
    N2 + Ng; the entry at ((alpha, gamma), beta) is a_{alpha,beta} g_gamma.
    """
    if not np.any(g.values):
        raise ValueError("tensor factor g is zero; T0 (x) g would be degenerate")
    out = GradedIndexMap(K0.d2 + g.d, K0.N2 + g.N)
    entries = np.zeros((out.size, K0.shape[1]))
    rows = out.indices
    alpha, gamma = rows[:, : K0.d2], rows[:, K0.d2 :]
    ok = (alpha.sum(axis=1) <= K0.N2) & (gamma.sum(axis=1) <= g.N)
    am, gm = K0.out_map, g.index_map
    for i in np.nonzero(ok)[0]:
        ia = am.rank(alpha[i])
        ig = gm.rank(gamma[i])
        entries[i] = K0.entries[ia] * g.values[ig]
    return KernelMatrix(K0.d1, K0.d2 + g.d, K0.N1, K0.N2 + g.N, entries)


class Witness(NamedTuple):
    result: bool
    entry: tuple[int, int] | None = None
    detail: str = ""

    def __bool__(self):
        return self.result


def is_hermite_diagonal(K: KernelMatrix, tol: float = 1e-12) -> Witness:
    """Is T a Hermite diagonal operator (possibly tensored with one Hermite function)?

    Square case: every off-diagonal entry is at most ``tol * max|a|``.  When the
    output dimension exceeds the input dimension, the output variable is
    split as (x, z) and the kernel must vanish outside a single z-multi-index
    gamma, with the remaining slice diagonal.
    """
    A = K.entries
    scale = np.abs(A).max()
    if scale == 0:
        return Witness(True, detail="zero kernel")
    thr = tol * scale
    if K.d1 == K.d2:
        if A.shape[0] != A.shape[1]:
            n = min(A.shape)
            extra = np.abs(A).copy()
            extra[np.arange(n), np.arange(n)] = 0.0
            if extra.max() > thr:
                i, j = np.unravel_index(int(np.argmax(extra)), A.shape)
                return Witness(False, (int(i), int(j)), "entry off the main diagonal")
            return Witness(True, detail="rectangular diagonal")
        off = np.abs(A - np.diag(np.diag(A)))
        if off.max() > thr:
            i, j = np.unravel_index(int(np.argmax(off)), A.shape)
            return Witness(False, (int(i), int(j)), "off-diagonal entry above tolerance")
        return Witness(True)
    if K.d2 > K.d1:
        return _tensor_diagonal(A, K.d1, K.d2, K.N1, K.N2, thr, transpose=False)
    return _tensor_diagonal(A.T, K.d2, K.d1, K.N2, K.N1, thr, transpose=True)


def _tensor_diagonal(A, d_in, d_out, N_in, N_out, thr, transpose):
    rows = GradedIndexMap(d_out, N_out).indices
    cols = GradedIndexMap(d_in, N_in).indices
    big = np.abs(A) > thr
    ri, ci = np.nonzero(big)
    gammas = {tuple(rows[i, d_in:]) for i in ri}
    def w(i, j):
        return (int(j), int(i)) if transpose else (int(i), int(j))
    if len(gammas) > 1:
        return Witness(False, w(ri[-1], ci[-1]), f"kernel depends on more than one tensor index: {sorted(gammas)[:3]}")
    for i, j in zip(ri, ci):
        if tuple(rows[i, :d_in]) != tuple(cols[j]):
            return Witness(False, w(i, j), "slice is not diagonal")
    return Witness(True, detail=f"diagonal tensored with h_{next(iter(gammas), ())}")


def is_positive_semidefinite(K: KernelMatrix, tol: float = 1e-10) -> bool:
    """Symmetric to ``tol`` and min eigenvalue >= -tol * max |eigenvalue|."""
    if not K.is_square:
        raise ShapeError("positivity is defined for square kernels (d1 = d2, N1 = N2)")
    A = K.entries
    scale = np.abs(A).max()
    if scale == 0:
        return True
    if np.abs(A - A.T).max() > tol * scale:
        return False
    d = _diag_or_none(A)
    w = d if d is not None else jacobi_eigh(A)[0]
    return bool(w.min() >= -tol * np.abs(w).max())


def op_norm_l1_to_linf(K: KernelMatrix, w1: WeightSpec | None, w2: WeightSpec | None):
    """Operator norm from l^1[w1] to l^inf[w2], with the maximizing (alpha, beta) ranks.

    Equals ``sup |a_{alpha,beta}| w2(alpha) / w1(beta)``: the unit ball of
    l^1[w1] is the closed convex hull of the vectors +-e_beta / w1(beta).
    """
    A = K.entries
    lw1 = np.zeros(A.shape[1]) if w1 is None else w1.log_values(K.in_map.indices)
    lw2 = np.zeros(A.shape[0]) if w2 is None else w2.log_values(K.out_map.indices)
    logw = lw2[:, None] - lw1[None, :]
    with np.errstate(over="ignore"):
        W = np.exp(logw)
    if np.all(np.isfinite(W)):
        vals = np.abs(A) * W
        i, j = np.unravel_index(int(np.argmax(vals)), A.shape)
        return float(vals[i, j]), (int(i), int(j))
    with np.errstate(divide="ignore"):
        total = np.log(np.abs(A)) + logw
    i, j = np.unravel_index(int(np.argmax(total)), A.shape)
    if total[i, j] == -np.inf:
        return 0.0, (0, 0)
    return float(np.exp(total[i, j])), (int(i), int(j))
