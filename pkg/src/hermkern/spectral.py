"""Singular values and what can be read off them.

Everything here works in l^2 coordinates: the Hermite functions are an
orthonormal basis, so the approximation numbers of a kernel operator are the
singular values of its coefficient matrix.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, logsumexp

from .hermite import CoeffVector
from .jacobi import EPS, jacobi_svd
from .kernel_ops import KernelMatrix, ShapeError, adjoint, compose

#: values below FLOOR * sigma_1 are excluded from fits
FLOOR = 1e3 * EPS
MIN_FIT_POINTS = 8

EXP_POWER = "exp"
FLAT_FACTORIAL = "flat"
POLYNOMIAL = "poly"
LAWS = (EXP_POWER, FLAT_FACTORIAL, POLYNOMIAL)


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class SingularSpectrum:
    values: np.ndarray
    shape: tuple[int, int]

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if np.any(v < 0) or np.any(np.diff(v) > 0):
            raise ValueError("singular values must be non-negative and non-increasing")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size

    def above_floor(self, floor: float = FLOOR) -> np.ndarray:
        if self.values.size == 0 or self.values[0] == 0:
            return np.zeros(0)
        return self.values[self.values > floor * self.values[0]]

    def to_csv(self) -> str:
        lines = ["k,sigma"] + [f"{k},{v!r}" for k, v in enumerate(self.values.tolist(), start=1)]
        return "\n".join(lines) + "\n"


def singular_values(K: KernelMatrix | np.ndarray) -> SingularSpectrum:
    A = K.entries if isinstance(K, KernelMatrix) else np.asarray(K, dtype=float)
    return SingularSpectrum(jacobi_svd(A, compute_vectors=False), A.shape)


def schatten_norm(spec: SingularSpectrum, p: float) -> float:
    if not p > 0:
        raise ValueError("Schatten exponent must be positive")
    v = spec.values
    if v.size == 0:
        return 0.0
    if math.isinf(p):
        return float(v[0])
    top = v[0]
    if top == 0:
        return 0.0
    return float(top * np.sum((v / top) ** p) ** (1.0 / p))


@dataclass(frozen=True)
class DecayFit:
    """Least-squares fit of log sigma_k against one of the decay laws.

    ``exp``:  log sigma_k = log C - c k^(1/(2ds))
    ``flat``: log sigma_k = log C + k log R - log Gamma(k+1) / (2 sigma d)
    ``poly``: log sigma_k = log C - N log k
    ``rate`` holds c, R or N respectively.
    """

    law: str
    rate: float
    C: float
    exponent: float | None
    residual: float
    n_points: int

    @property
    def member(self) -> bool:
        if self.law == FLAT_FACTORIAL:
            return True
        return self.rate > 1e-8


def fit_decay(spec: SingularSpectrum, d: int, law: str, s: float | None = None,
              sigma: float | None = None) -> DecayFit:
    if law not in LAWS:
        raise ValueError(f"unknown decay law {law!r}")
    vals = spec.above_floor()
    if vals.size < MIN_FIT_POINTS:
        raise FitError(f"need at least {MIN_FIT_POINTS} singular values above the floor, have {vals.size}")
    k = np.arange(1, vals.size + 1, dtype=float)
    y = np.log(vals)
    if law == EXP_POWER:
        if s is None or not s > 0:
            raise ValueError("exp law needs s > 0")
        expo = 1.0 / (2.0 * d * s)
        x = k**expo
    elif law == FLAT_FACTORIAL:
        if sigma is None or not sigma > 0:
            raise ValueError("flat law needs sigma > 0")
        expo = 1.0 / (2.0 * d * sigma)
        y = y + expo * gammaln(k + 1)
        x = k
    else:
        expo = None
        x = np.log(k)
    X = np.column_stack([np.ones_like(x), x])
    (c0, slope), *_ = np.linalg.lstsq(X, y, rcond=None)
    res = float(np.sqrt(np.mean((X @ np.array([c0, slope]) - y) ** 2)))
    rate = math.exp(slope) if law == FLAT_FACTORIAL else -slope
    return DecayFit(law, float(rate), math.exp(c0), expo, res, int(vals.size))


def parse_fit(text: str) -> dict:
    """``exp:d=1:s=0.5``, ``flat:d=1:sigma=1`` or ``poly:d=1`` as keyword arguments of fit_decay."""
    law, *fields = text.split(":")
    if law not in LAWS:
        raise ValueError(f"unknown decay law {law!r}")
    out = {"law": law}
    for f in fields:
        key, sep, val = f.partition("=")
        if not sep or key not in ("d", "s", "sigma"):
            raise ValueError(f"bad field {f!r} in fit spec {text!r}")
        out[key] = int(val) if key == "d" else float(val)
    return out


# ---------------------------------------------------------------------------
# relations between spectra


@dataclass
class BoundReport:
    checked: int
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def verify_composition_bounds(K2: KernelMatrix, K1: KernelMatrix, k_max: int | None = None,
                              slack: float = 1e-10) -> BoundReport:
    """sigma_k(K2 K1) <= ||K1|| sigma_k(K2) and <= ||K2|| sigma_k(K1), with C = 1.

    ``k`` in the report is 1-based.
    """
    if (K1.d2, K1.N2) != (K2.d1, K2.N1):
        raise ShapeError("kernels are not composable")
    s12 = singular_values(compose(K2, K1)).values
    s1 = singular_values(K1).values
    s2 = singular_values(K2).values
    n1 = s1[0] if s1.size else 0.0
    n2 = s2[0] if s2.size else 0.0
    kmax = s12.size if k_max is None else min(k_max, s12.size)
    rep = BoundReport(0)
    # forming the product costs about dim * eps * ||K1|| ||K2|| absolutely; a bound of 0 is met only up to that
    noise = max(K1.shape + K2.shape) * EPS * n1 * n2
    for k in range(kmax):
        for name, bound in (("||K1|| sigma_k(K2)", n1 * s2[k] if k < s2.size else 0.0),
                            ("||K2|| sigma_k(K1)", n2 * s1[k] if k < s1.size else 0.0)):
            rep.checked += 1
            if s12[k] > bound * (1.0 + slack) + noise:
                rep.violations.append({"k": k + 1, "bound": name, "sigma": float(s12[k]), "limit": float(bound)})
    return rep


@dataclass
class SquareRelationReport:
    compared: int
    max_rel_error_KtK: float
    max_rel_error_KKt: float
    tol: float

    @property
    def ok(self) -> bool:
        return self.max_rel_error_KtK <= self.tol and self.max_rel_error_KKt <= self.tol


def check_square_relation(K: KernelMatrix, tol: float = 1e-8, floor: float = 1e-6) -> SquareRelationReport:
    """sigma_k(K*K) = sigma_k(KK*) = sigma_k(K)^2.

    Only k with sigma_k(K)^2 >= floor * sigma_1^2 are compared: forming the
    product costs an absolute error of order eps * sigma_1^2.
    """
    s = singular_values(K).values
    a = singular_values(compose(adjoint(K), K)).values
    b = singular_values(compose(K, adjoint(K))).values
    sq = s**2
    if sq.size == 0 or sq[0] == 0:
        return SquareRelationReport(0, 0.0, 0.0, tol)
    keep = sq >= floor * sq[0]
    n = int(np.count_nonzero(keep))
    ea = float(np.max(np.abs(a[:n] - sq[:n]) / sq[:n]))
    eb = float(np.max(np.abs(b[:n] - sq[:n]) / sq[:n]))
    return SquareRelationReport(n, ea, eb, tol)


# ---------------------------------------------------------------------------
# Schmidt expansion


@dataclass(frozen=True)
class SchmidtExpansion:
    """K = sum_j lambdas[j] f2_j (x) f1_j, f1 on the input side, f2 on the output side."""

    lambdas: np.ndarray
    f1: list[CoeffVector]
    f2: list[CoeffVector]
    q: float
    source: KernelMatrix

    def reconstruct(self) -> KernelMatrix:
        A = np.zeros(self.source.shape)
        for lam, u, v in zip(self.lambdas, self.f2, self.f1):
            A += lam * np.outer(u.values, v.values)
        return self.source.with_entries(A)

    def orthogonality(self) -> tuple[float, float]:
        """Largest |<f_i, f_j>| / (|f_i| |f_j|), i != j, for each family."""
        return _max_cosine([v.values for v in self.f1]), _max_cosine([u.values for u in self.f2])


def _max_cosine(vectors) -> float:
    if len(vectors) < 2:
        return 0.0
    M = np.array(vectors)
    nrm = np.linalg.norm(M, axis=1)
    G = np.abs(M @ M.T) / np.outer(nrm, nrm)
    np.fill_diagonal(G, 0.0)
    return float(G.max())


def schmidt_expansion(K: KernelMatrix, q: float = 1.0 / 3.0) -> SchmidtExpansion:
    """Rescaled SVD: lambda_j = sigma_j^(1-2q), f1_j = sigma_j^q v_j, f2_j = sigma_j^q u_j.

    With q = 1/3 all three factors carry sigma_j^(1/3).  Terms below the
    numerical rank cutoff ``max(m, n) * eps * sigma_1`` are dropped: their
    singular vectors are not determined by the data.
    """
    if not 0 < q < 0.5 + 1e-12:
        raise ValueError("rescale exponent must lie in (0, 1/2]")
    U, s, Vt = jacobi_svd(K.entries)
    if s.size == 0 or s[0] == 0:
        raise ValueError("kernel is zero; no Schmidt expansion")
    pos = s > max(K.shape) * EPS * s[0]
    s, U, Vt = s[pos], U[:, pos], Vt[pos]
    scale = s**q
    f1 = [CoeffVector(K.d1, K.N1, scale[j] * Vt[j]) for j in range(s.size)]
    f2 = [CoeffVector(K.d2, K.N2, scale[j] * U[:, j]) for j in range(s.size)]
    return SchmidtExpansion(s ** (1.0 - 2.0 * q), f1, f2, q, K)


# ---------------------------------------------------------------------------
# harmonic oscillator norms


@dataclass(frozen=True)
class NormSequence:
    """log ||H^N K||_{L^2} for N = 0..N_max (joint), or log ||H1^N1 H2^N2 K|| indexed [N1, N2] (split)."""

    log_norms: np.ndarray
    split: bool

    @property
    def norms(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.log_norms)

    @property
    def overflow(self) -> bool:
        return bool(np.any(self.log_norms > math.log(np.finfo(float).max)))


MAX_POWER = 40


def oscillator_norm_sequence(K: KernelMatrix, N_max: int, split: bool = False) -> NormSequence:
    """Coefficient-side norms of H^N K, H = H_2 + H_1 on R^d2 x R^d1.

    H_1 multiplies a_{alpha,beta} by 2|beta| + d1 and H_2 by 2|alpha| + d2.
    Computed in the log domain; ``norms`` saturates at inf and ``overflow`` flags it.
    """
    if not 0 <= N_max <= MAX_POWER:
        raise ValueError(f"N_max must lie in [0, {MAX_POWER}]")
    e1 = np.log(2.0 * K.in_map.degrees + K.d1)[None, :]
    e2 = np.log(2.0 * K.out_map.degrees + K.d2)[:, None]
    with np.errstate(divide="ignore"):
        la = np.log(np.abs(K.entries))
    if not split:
        lj = np.log((2.0 * K.in_map.degrees + K.d1)[None, :] + (2.0 * K.out_map.degrees + K.d2)[:, None])
        out = np.array([0.5 * logsumexp(2.0 * (la + n * lj)) for n in range(N_max + 1)])
        return NormSequence(out, False)
    out = np.empty((N_max + 1, N_max + 1))
    for n1 in range(N_max + 1):
        for n2 in range(N_max + 1):
            out[n1, n2] = 0.5 * logsumexp(2.0 * (la + n1 * e1 + n2 * e2))
    return NormSequence(out, True)


def binomial_bridge(K: KernelMatrix, N_max: int = 10, slack: float = 1e-12) -> list[dict]:
    """Violations of ||H^N K|| <= sum_k C(N,k) ||H1^(N-k) H2^k K||, N <= N_max."""
    joint = oscillator_norm_sequence(K, N_max).log_norms
    sp = oscillator_norm_sequence(K, N_max, split=True).log_norms
    bad = []
    for N in range(N_max + 1):
        terms = [math.log(math.comb(N, k)) + sp[N - k, k] for k in range(N + 1)]
        rhs = logsumexp(terms)
        if joint[N] > rhs + slack:
            bad.append({"N": N, "lhs_log": float(joint[N]), "rhs_log": float(rhs)})
    return bad


def fit_oscillator_growth(seq: NormSequence, s: float) -> tuple[float, float, float]:
    """Fit log ||H^N K|| - 2s log N! = log C + N log h; returns (h, C, rms residual)."""
    if seq.split:
        raise ValueError("growth fit needs the joint sequence")
    n = np.arange(seq.log_norms.size, dtype=float)
    if n.size < 3:
        raise FitError("need at least 3 terms")
    y = seq.log_norms - 2.0 * s * gammaln(n + 1)
    X = np.column_stack([np.ones_like(n), n])
    (c0, slope), *_ = np.linalg.lstsq(X, y, rcond=None)
    res = float(np.sqrt(np.mean((X @ np.array([c0, slope]) - y) ** 2)))
    return math.exp(slope), math.exp(c0), res
