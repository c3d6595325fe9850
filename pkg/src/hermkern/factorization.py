"""Constructive factorizations of kernels through diagonal Hermite multipliers.

Every construction rescales the coefficient matrix ``a`` by positive diagonal
matrices, so the factors compose back to ``a`` exactly in exact arithmetic:

* Roumieu, two factors:  ``a = b . c`` with ``c = diag(exp(-(r/2)|beta|^(1/2s)))``
  and ``b = a . diag(exp((r/2)|beta|^(1/2s)))``.
* Beurling, two factors: the same with a column-dependent rate ``j`` taken from a
  partition of the column indices into blocks ``I_j``.
* Flat, three factors:   ``a = D2 . a0 . D1`` with ``D_j = diag((alpha!)^(-1/2sigma) R^(2|alpha|))``
  (Roumieu) or with ``R`` replaced blockwise by ``1/m`` (Beurling).
* Diagonal square root:  ``a = D1 . D2`` for diagonal ``a >= 0``.

All scalings are formed in the log domain and exponentiated once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .hermite import CoeffVector
from .jacobi import jacobi_eigh
from .kernel_ops import (
    KernelMatrix,
    ShapeError,
    adjoint,
    compose_all,
    frobenius_relative,
    is_hermite_diagonal,
    is_positive_semidefinite,
    tensor_with,
)
from .weights import EXP, FLAT, ClassCandidate, ClassEstimate, fit_class, fit_candidate

_LOG_MAX = math.log(np.finfo(float).max)
_LOG_TINY = math.log(np.finfo(float).tiny)


class FactorizationError(ValueError):
    pass


class PreconditionError(FactorizationError):
    pass


@dataclass(frozen=True)
class PartitionPlan:
    """Disjoint blocks I_1, I_2, ... of index ranks, with the thresholds Theta_n."""

    thresholds: tuple[int, ...]
    blocks: tuple[np.ndarray, ...]
    size: int

    def block_of(self) -> np.ndarray:
        """1-based block number of every rank."""
        out = np.zeros(self.size, dtype=np.int64)
        for j, b in enumerate(self.blocks, start=1):
            out[b] = j
        return out

    def is_partition(self) -> bool:
        if not self.blocks:
            return self.size == 0
        allidx = np.concatenate(self.blocks)
        return allidx.size == self.size and np.array_equal(np.sort(allidx), np.arange(self.size))


@dataclass
class FactorizationResult:
    """Factors in composition order: ``K == compose_all(*factors)`` (rightmost applied first)."""

    factors: list[KernelMatrix]
    residual: float
    kind: str
    params: dict = field(default_factory=dict)
    diagonal: list[bool] = field(default_factory=list)
    partitions: dict = field(default_factory=dict)
    bounds: dict = field(default_factory=dict)

    def reconstruct(self) -> KernelMatrix:
        return compose_all(*self.factors)

    def class_estimates(self, candidates: Sequence[ClassCandidate] | None = None) -> list[ClassEstimate | None]:
        """Best class fit of each factor (None when a factor cannot be fitted)."""
        out = []
        for F in self.factors:
            try:
                out.append(fit_class(F, candidates))
            except ValueError:
                out.append(None)
        return out


def _scale_exp(logs: np.ndarray, what: str, labels: np.ndarray, nonzero: np.ndarray) -> np.ndarray:
    """exp(logs) with overflow/underflow reported where it matters."""
    bad_hi = (logs > _LOG_MAX) & nonzero
    if np.any(bad_hi):
        i = int(np.argmax(bad_hi))
        raise FactorizationError(f"{what} overflows at index {tuple(int(v) for v in labels[i])}")
    bad_lo = (logs < _LOG_TINY) & nonzero
    if np.any(bad_lo):
        i = int(np.argmax(bad_lo))
        raise FactorizationError(f"{what} underflows at index {tuple(int(v) for v in labels[i])}")
    with np.errstate(over="ignore", under="ignore"):
        return np.exp(logs)


def _scaled_entries(A: np.ndarray, log_rows: np.ndarray, log_cols: np.ndarray, rows, cols, what: str):
    """A[i, j] * exp(log_rows[i] + log_cols[j]) without forming the separate factors."""
    with np.errstate(divide="ignore"):
        L = np.log(np.abs(A)) + log_rows[:, None] + log_cols[None, :]
    nz = A != 0
    if np.any(L[nz] > _LOG_MAX):
        i, j = np.argwhere(nz & (L > _LOG_MAX))[0]
        raise FactorizationError(f"{what} overflows at ({tuple(rows[i])}, {tuple(cols[j])})")
    S = log_rows[:, None] + log_cols[None, :]
    if np.all(np.abs(S[nz]) < _LOG_MAX / 2):
        # scaling representable: one rounding less than going through log|a|
        return A * np.exp(np.where(nz, S, 0.0))
    with np.errstate(under="ignore"):
        return np.sign(A) * np.exp(np.where(nz, L, -np.inf))


def _require_nonzero(K: KernelMatrix) -> None:
    if not np.any(K.entries):
        raise PreconditionError("kernel is zero")


def _residual(K: KernelMatrix, factors: list[KernelMatrix]) -> float:
    return frobenius_relative(compose_all(*factors), K)


def _powers(deg: np.ndarray, s: float) -> np.ndarray:
    return deg.astype(float) ** (1.0 / (2.0 * s))


def _lift(K1: KernelMatrix, K2: KernelMatrix, d0: int | None):
    # route the factorization through R^d0 = R^d1 x R^(d0-d1) with h_0 on the extra variable
    if d0 is None or d0 == K1.d2:
        return K1, K2
    if d0 < K1.d2:
        raise FactorizationError(f"intermediate dimension d0={d0} must be at least d1={K1.d2}")
    g = CoeffVector.unit(d0 - K1.d2, 0, (0,) * (d0 - K1.d2))
    return tensor_with(K1, g), adjoint(tensor_with(adjoint(K2), g))


def factor_roumieu(K: KernelMatrix, s: float, r: float | str = "auto", d0: int | None = None) -> FactorizationResult:
    """T = T2 o T1 with T1 a positive semi-definite Hermite diagonal operator.

    ``r = "auto"`` uses half the rate fitted by the exp template of order s.
    ``d0 > d1`` routes the factorization through R^d0 by tensoring with h_0.
    """
    _require_nonzero(K)
    if not s > 0:
        raise FactorizationError("s must be positive")
    if r == "auto":
        r = 0.5 * fit_candidate(K, ClassCandidate(EXP, s)).rate
    r = float(r)
    if not r > 0:
        raise FactorizationError(f"rate r must be positive, got {r:g}")
    cols = K.in_map.indices
    rows = K.out_map.indices
    w = _powers(K.in_map.degrees, s)
    colnz = np.any(K.entries != 0, axis=0)
    c = _scale_exp(-0.5 * r * w, "diagonal factor exp(-(r/2)|beta|^(1/2s))", cols, colnz)
    b = _scaled_entries(K.entries, np.zeros(len(rows)), 0.5 * r * w, rows, cols, "exp((r/2)|beta|^(1/2s))")
    K1 = KernelMatrix.diagonal(K.d1, K.N1, c)
    K2 = K.with_entries(b)
    bounds = roumieu_sup_bounds(K, K2, K1, s, r)
    K1, K2 = _lift(K1, K2, d0)
    factors = [K2, K1]
    return FactorizationResult(factors, _residual(K, factors), "roumieu", {"s": s, "r": r, "d0": d0 or K.d1},
                               [False, True], bounds=bounds)


def roumieu_sup_bounds(K: KernelMatrix, K2: KernelMatrix, K1: KernelMatrix, s: float, r: float) -> dict:
    """The three suprema of the Roumieu construction.

    ``b_weighted = sup |b| e^{(r/2)(w_a + w_b)}`` must not exceed
    ``a_weighted = sup |a| e^{r(w_a + w_b)}``; ``c_weighted`` uses rate r/4
    and equals 1 for the diagonal factor.
    """
    def wsup(A, wr, wc, rate):
        with np.errstate(divide="ignore"):
            L = np.log(np.abs(A)) + rate * (wr[:, None] + wc[None, :])
        top = L.max()
        return math.exp(top) if top <= _LOG_MAX else math.inf

    wa = _powers(K.out_map.degrees, s)
    wb = _powers(K.in_map.degrees, s)
    return {
        "a_weighted": wsup(K.entries, wa, wb, r),
        "b_weighted": wsup(K2.entries, wa, wb, 0.5 * r),
        "c_weighted": wsup(K1.entries, wb, wb, 0.25 * r),
    }


def _partition(levels: list[int], size_of, degrees: np.ndarray) -> PartitionPlan:
    """Blocks I_1 = {|b| <= Theta_1 + 1}, I_j = {unassigned, |b| <= Theta_j + j}."""
    n_idx = degrees.size
    assigned = np.zeros(n_idx, dtype=bool)
    blocks, thetas = [], []
    n = 1
    while not assigned.all():
        theta = size_of(n)
        thetas.append(theta)
        blk = np.nonzero(~assigned & (degrees <= theta + n))[0]
        assigned[blk] = True
        blocks.append(blk)
        n += 1
    return PartitionPlan(tuple(thetas), tuple(blocks), n_idx)


def beurling_partition(K: KernelMatrix, s: float) -> PartitionPlan:
    """Column partition from Theta_n = max{|beta| : |a_{alpha,beta}| >= exp(-2(n+1)(w_alpha + w_beta)), some alpha}.

    The maximum runs over the truncated index set; an empty set gives Theta_n = 0.
    """
    wa = _powers(K.out_map.degrees, s)
    wb = _powers(K.in_map.degrees, s)
    with np.errstate(divide="ignore"):
        loga = np.log(np.abs(K.entries))
    W = wa[:, None] + wb[None, :]
    degb = K.in_map.degrees

    def theta(n):
        hit = np.any(loga >= -2.0 * (n + 1) * W, axis=0)
        return int(degb[hit].max()) if np.any(hit) else 0

    return _partition([], theta, degb)


def factor_beurling(K: KernelMatrix, s: float, d0: int | None = None) -> FactorizationResult:
    """T = T2 o T1 with column rates j on blocks I_j (T1 diagonal, positive)."""
    _require_nonzero(K)
    if not s > 0:
        raise FactorizationError("s must be positive")
    plan = beurling_partition(K, s)
    j = plan.block_of().astype(float)
    cols = K.in_map.indices
    rows = K.out_map.indices
    w = _powers(K.in_map.degrees, s)
    colnz = np.any(K.entries != 0, axis=0)
    c = _scale_exp(-j * w, "diagonal factor exp(-j|beta|^(1/2s))", cols, colnz)
    b = _scaled_entries(K.entries, np.zeros(len(rows)), j * w, rows, cols, "exp(j|beta|^(1/2s))")
    K1 = KernelMatrix.diagonal(K.d1, K.N1, c)
    K2 = K.with_entries(b)
    K1, K2 = _lift(K1, K2, d0)
    factors = [K2, K1]
    return FactorizationResult(factors, _residual(K, factors), "beurling", {"s": s, "d0": d0 or K.d1},
                               [False, True], partitions={"columns": plan})


def flat_sup_constant(K: KernelMatrix, sigma: float, R: float) -> float:
    """sup |a| (alpha! beta!)^(1/2sigma) R^(-(|alpha|+|beta|))."""
    L = _flat_log_profile(K, sigma) - math.log(R) * (K.out_map.degrees[:, None] + K.in_map.degrees[None, :])
    top = L.max()
    return math.exp(top) if top <= _LOG_MAX else math.inf


def _flat_log_profile(K: KernelMatrix, sigma: float) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return (np.log(np.abs(K.entries)) + K.out_map.log_factorials[:, None] / (2 * sigma)
                + K.in_map.log_factorials[None, :] / (2 * sigma))


def factor_flat_roumieu(K: KernelMatrix, sigma: float, R: float | str = "auto") -> FactorizationResult:
    """T = T2 o T0 o T1 with T1, T2 diagonal, entries (alpha!)^(-1/2sigma) R^(2|alpha|).

    ``R = "auto"`` takes 1.5 times the base fitted by the flat template,
    and at least 1.5 so that R > 1.
    """
    _require_nonzero(K)
    if not sigma > 0:
        raise FactorizationError("sigma must be positive")
    if R == "auto":
        fitted = fit_candidate(K, ClassCandidate(FLAT, sigma)).rate
        R = max(1.5 * fitted, 1.5)
    R = float(R)
    if not R > 1:
        raise FactorizationError(f"R must exceed 1, got {R:g}")
    lR = math.log(R)
    im, om = K.in_map, K.out_map
    l1 = -im.log_factorials / (2 * sigma) + 2 * lR * im.degrees
    l2 = -om.log_factorials / (2 * sigma) + 2 * lR * om.degrees
    colnz = np.any(K.entries != 0, axis=0)
    rownz = np.any(K.entries != 0, axis=1)
    d1 = _scale_exp(l1, "(beta!)^(-1/2sigma) R^(2|beta|)", im.indices, colnz)
    d2 = _scale_exp(l2, "(alpha!)^(-1/2sigma) R^(2|alpha|)", om.indices, rownz)
    a0 = _scaled_entries(K.entries, -l2, -l1, om.indices, im.indices, "middle factor")
    K1 = KernelMatrix.diagonal(K.d1, K.N1, d1)
    K2 = KernelMatrix.diagonal(K.d2, K.N2, d2)
    K0 = K.with_entries(a0)
    factors = [K2, K0, K1]
    C = flat_sup_constant(K, sigma, R)
    deg = om.degrees[:, None] + im.degrees[None, :]
    bound = C * np.exp(-lR * deg)
    excess = np.abs(a0) - bound * (1 + 1e-12)
    return FactorizationResult(
        factors, _residual(K, factors), "flat-roumieu", {"sigma": sigma, "R": R},
        [True, False, True],
        bounds={"C": C, "middle_bound_violations": int(np.count_nonzero(excess > 0)),
                "middle_bound_max_ratio": float(np.max(np.abs(a0) / bound))},
    )


def flat_beurling_partitions(K: KernelMatrix, sigma: float) -> tuple[PartitionPlan, PartitionPlan]:
    """Column (j=1) and row (j=2) partitions from
    Theta_{j,n}: |a| >= (n+1)^(-6(|alpha|+|beta|)) (alpha! beta!)^(-1/2sigma)."""
    P = _flat_log_profile(K, sigma)
    deg = K.out_map.degrees[:, None] + K.in_map.degrees[None, :]

    def hits(n):
        return P >= -6.0 * math.log(n + 1) * deg

    def theta_cols(n):
        h = np.any(hits(n), axis=0)
        return int(K.in_map.degrees[h].max()) if np.any(h) else 0

    def theta_rows(n):
        h = np.any(hits(n), axis=1)
        return int(K.out_map.degrees[h].max()) if np.any(h) else 0

    return (_partition([], theta_cols, K.in_map.degrees),
            _partition([], theta_rows, K.out_map.degrees))


def factor_flat_beurling(K: KernelMatrix, sigma: float) -> FactorizationResult:
    """Three factors with blockwise scalings m^(-|alpha+beta|) on the diagonal factors."""
    _require_nonzero(K)
    if not sigma > 0:
        raise FactorizationError("sigma must be positive")
    p1, p2 = flat_beurling_partitions(K, sigma)
    m1 = p1.block_of().astype(float)
    m2 = p2.block_of().astype(float)
    im, om = K.in_map, K.out_map
    # diagonal entries: |alpha + alpha| = 2|alpha|
    l1 = -im.log_factorials / (2 * sigma) - 2 * im.degrees * np.log(m1)
    l2 = -om.log_factorials / (2 * sigma) - 2 * om.degrees * np.log(m2)
    colnz = np.any(K.entries != 0, axis=0)
    rownz = np.any(K.entries != 0, axis=1)
    d1 = _scale_exp(l1, "column diagonal factor", im.indices, colnz)
    d2 = _scale_exp(l2, "row diagonal factor", om.indices, rownz)
    a0 = _scaled_entries(K.entries, -l2, -l1, om.indices, im.indices, "middle factor")
    K1 = KernelMatrix.diagonal(K.d1, K.N1, d1)
    K2 = KernelMatrix.diagonal(K.d2, K.N2, d2)
    K0 = K.with_entries(a0)
    factors = [K2, K0, K1]
    return FactorizationResult(
        factors, _residual(K, factors), "flat-beurling", {"sigma": sigma},
        [True, False, True], partitions={"columns": p1, "rows": p2},
        bounds=flat_beurling_block_bounds(K0, p1, p2),
    )


def flat_beurling_block_bounds(K0: KernelMatrix, cols: PartitionPlan, rows: PartitionPlan) -> dict:
    """Entrywise block bounds on the middle factor.

    For alpha in I_{2,m2}, beta in I_{1,m1}:
    ``|a0| <= (m1 m2)^(-(|alpha|+|beta|))`` when m1, m2 >= 2, and
    ``|a0| <= m^(-4(|alpha|+|beta|))`` when only one of them, m, is >= 2.
    The block (1, 1) is finite and carries no bound.
    """
    m1 = cols.block_of()[None, :].astype(float)
    m2 = rows.block_of()[:, None].astype(float)
    deg = K0.out_map.degrees[:, None] + K0.in_map.degrees[None, :]
    logb = np.full(K0.shape, np.inf)
    both = (m1 >= 2) & (m2 >= 2)
    only1 = (m1 >= 2) & (m2 == 1)
    only2 = (m2 >= 2) & (m1 == 1)
    logb = np.where(both, -deg * np.log(m1 * m2), logb)
    logb = np.where(only1, -4 * deg * np.log(np.broadcast_to(m1, K0.shape)), logb)
    logb = np.where(only2, -4 * deg * np.log(np.broadcast_to(m2, K0.shape)), logb)
    with np.errstate(divide="ignore"):
        la0 = np.log(np.abs(K0.entries))
    viol = la0 > logb + 1e-12
    return {"middle_bound_violations": int(np.count_nonzero(viol)),
            "bounded_entries": int(np.count_nonzero(np.isfinite(logb)))}


def factor_diagonal_sqrt(K: KernelMatrix, sigma: float) -> FactorizationResult:
    """T = T1 o T2 = T2 o T1 for a diagonal T >= 0.

    T1 has entries a^(1/2) (alpha!)^(-1/2sigma) and T2 has a^(1/2) (alpha!)^(1/2sigma).
    """
    if not K.is_square:
        raise PreconditionError("diagonal square root needs a square kernel")
    if not is_hermite_diagonal(K, 0.0):
        raise PreconditionError("kernel is not Hermite diagonal")
    a = np.diag(K.entries)
    if np.any(a < 0):
        i = int(np.argmax(a < 0))
        raise PreconditionError(f"negative diagonal entry {a[i]:g} at {tuple(K.in_map.indices[i])}")
    root = np.sqrt(a)
    lf = K.in_map.log_factorials / (2 * sigma)
    k1 = root * _scale_exp(-lf, "(alpha!)^(-1/2sigma)", K.in_map.indices, root > 0)
    k2 = root * _scale_exp(lf, "(alpha!)^(1/2sigma)", K.in_map.indices, root > 0)
    K1 = KernelMatrix.diagonal(K.d1, K.N1, k1)
    K2 = KernelMatrix.diagonal(K.d1, K.N1, k2)
    r12 = _residual(K, [K1, K2])
    r21 = _residual(K, [K2, K1])
    return FactorizationResult([K1, K2], max(r12, r21), "diag-sqrt", {"sigma": sigma}, [True, True],
                               bounds={"residual_12": r12, "residual_21": r21,
                                       "commutator": frobenius_relative(compose_all(K1, K2), compose_all(K2, K1))})


def fractional_power(K: KernelMatrix, rexp: float, tol: float = 1e-10) -> KernelMatrix:
    """K^rexp for positive semi-definite K, by Jacobi eigen-decomposition.

    Eigenvalues in [-tol * max|eig|, 0) are clamped to zero.
    """
    if not 0 < rexp <= 1:
        raise ValueError("exponent must lie in (0, 1]")
    if not K.is_square:
        raise ShapeError("fractional powers need a square kernel")
    if not is_positive_semidefinite(K, tol):
        raise PreconditionError("kernel is not positive semi-definite within tolerance")
    w, Q = jacobi_eigh(K.entries)
    w = np.clip(w, 0.0, None)
    return K.with_entries((Q * w**rexp) @ Q.T)
