"""Weights on N^d, weighted l^p norms and class estimation for kernels.

Three weight families are supported:

* ``exp``  : theta(alpha) = exp(r |alpha|^(1/(2s)))     (Pilipovic scale, s > 0)
* ``flat`` : theta(alpha) = r^|alpha| (alpha!)^(1/(2 sigma))
* ``poly`` : theta(alpha) = <alpha>^r,  <x> = (1 + |x|^2)^(1/2)

A coefficient array ``c`` lies in the weighted space l^p[theta] when
``{c_alpha theta(alpha)}`` is in l^p.  A kernel ``a_{alpha,beta}`` belongs to the
class of ``theta`` when ``sup |a_{alpha,beta}| theta(alpha) theta(beta)`` is finite;
at finite truncation the supremum always exists, so :func:`fit_class` fits the
decay template instead and reports the realized supremum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .multiindex import GradedIndexMap, MultiIndex

EXP, FLAT, POLY = "exp", "flat", "poly"
KINDS = (EXP, FLAT, POLY)

#: s-grid (and sigma-grid for flat classes) tried by fit_class when no candidates are given.
DEFAULT_GRID = (0.25, 0.5, 1.0, 1.5, 2.0)

_LOG_MAX = math.log(np.finfo(float).max)


class WeightOverflowError(ArithmeticError):
    """A weight value is not representable as a finite double."""

    def __init__(self, message, alpha=None):
        super().__init__(message)
        self.alpha = alpha


class EffectivelyZeroKernel(ValueError):
    pass


@dataclass(frozen=True)
class WeightSpec:
    """A weight on N^d.

    ``r`` is the rate for ``exp``, the base for ``flat`` and the exponent for
    ``poly``.  ``s`` is only used by ``exp`` and ``sigma`` only by ``flat``.
    """

    kind: str
    r: float
    s: float | None = None
    sigma: float | None = None
    inverse: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown weight kind {self.kind!r}; expected one of {KINDS}")
        if not math.isfinite(self.r):
            raise ValueError(f"weight parameter r must be finite, got {self.r}")
        if self.kind == EXP and not (self.s is not None and self.s > 0):
            raise ValueError("exp weights need s > 0")
        if self.kind == FLAT:
            if not (self.sigma is not None and self.sigma > 0):
                raise ValueError("flat weights need sigma > 0")
            if self.r <= 0:
                raise ValueError("flat weights need r > 0")

    @classmethod
    def exponential(cls, s: float, r: float) -> "WeightSpec":
        return cls(EXP, float(r), s=float(s))

    @classmethod
    def flat(cls, sigma: float, r: float) -> "WeightSpec":
        return cls(FLAT, float(r), sigma=float(sigma))

    @classmethod
    def polynomial(cls, r: float) -> "WeightSpec":
        return cls(POLY, float(r))

    def dual(self) -> "WeightSpec":
        """The weight 1/theta."""
        if self.kind == FLAT:
            # 1/r alone would leave the factorial factor in place
            return replace(self, inverse=not self.inverse)
        return replace(self, r=-self.r)

    def log_values(self, indices: np.ndarray) -> np.ndarray:
        """log theta(alpha) for each row of an (M, d) integer array."""
        lv = self._log_values(np.atleast_2d(np.asarray(indices)))
        return -lv if self.inverse else lv

    def _log_values(self, indices: np.ndarray) -> np.ndarray:
        deg = indices.sum(axis=1).astype(float)
        if self.kind == EXP:
            return self.r * deg ** (1.0 / (2.0 * self.s))
        if self.kind == FLAT:
            from scipy.special import gammaln

            logfact = gammaln(indices + 1.0).sum(axis=1)
            return deg * math.log(self.r) + logfact / (2.0 * self.sigma)
        sq = (indices.astype(float) ** 2).sum(axis=1)
        return 0.5 * self.r * np.log1p(sq)

    def value(self, alpha: Sequence[int]) -> float:
        return weight_value(self, alpha)

    def __str__(self) -> str:
        return format_weight(self)


def weight_value(spec: WeightSpec, alpha: Sequence[int]) -> float:
    alpha = MultiIndex(alpha)
    lv = float(spec.log_values(np.array([alpha]))[0])
    if lv > _LOG_MAX:
        raise WeightOverflowError(f"weight {spec} overflows at alpha={tuple(alpha)}", alpha=alpha)
    return math.exp(lv)


def parse_weight(text: str) -> WeightSpec:
    """Parse ``exp:s=1:r=0.5``, ``flat:sigma=1:r=2`` or ``poly:r=4``."""
    kind, *fields = text.strip().split(":")
    params = _parse_fields(fields, text)
    try:
        if kind == EXP:
            return WeightSpec.exponential(params.pop("s"), params.pop("r"))
        if kind == FLAT:
            return WeightSpec.flat(params.pop("sigma"), params.pop("r"))
        if kind == POLY:
            return WeightSpec.polynomial(params.pop("r"))
    except KeyError as exc:
        raise ValueError(f"weight {text!r} is missing parameter {exc.args[0]!r}") from None
    raise ValueError(f"unknown weight kind in {text!r}")


def format_weight(spec: WeightSpec) -> str:
    if spec.inverse:
        return "1/(" + format_weight(replace(spec, inverse=False)) + ")"
    if spec.kind == EXP:
        return f"exp:s={spec.s:g}:r={spec.r:g}"
    if spec.kind == FLAT:
        return f"flat:sigma={spec.sigma:g}:r={spec.r:g}"
    return f"poly:r={spec.r:g}"


def _parse_fields(fields: Iterable[str], text: str) -> dict[str, float]:
    out = {}
    for f in fields:
        key, sep, val = f.partition("=")
        if not sep:
            raise ValueError(f"malformed field {f!r} in {text!r}")
        out[key.strip()] = float(val)
    return out


def _index_rows(n: int, d: int) -> np.ndarray:
    N = 0
    while True:
        gm = GradedIndexMap(d, N)
        if gm.size == n:
            return gm.indices
        if gm.size > n:
            raise ValueError(f"array length {n} is not a truncation size for d={d}")
        N += 1


def weighted_norm(values, weight=None, p: float = 2.0, d: int = 1) -> float:
    """l^p norm of {c_alpha theta(alpha)} over a truncated coefficient array.

    ``weight`` may be None (theta = 1), a :class:`WeightSpec` (the array is then
    read in graded-lex order for dimension ``d``) or an explicit array of
    weight values.  ``p = inf`` gives the supremum; ``0 < p < 1`` gives the
    quasi-norm.
    """
    c = np.asarray(values, dtype=float).ravel()
    if c.size == 0:
        return 0.0
    if not np.all(np.isfinite(c)):
        raise ValueError("coefficient array has non-finite entries")
    if not (p == math.inf or p > 0):
        raise ValueError(f"exponent p must be in (0, inf], got {p}")
    if weight is None:
        logw = np.zeros_like(c)
    elif isinstance(weight, WeightSpec):
        logw = weight.log_values(_index_rows(c.size, d))
    else:
        w = np.asarray(weight, dtype=float).ravel()
        if w.shape != c.shape:
            raise ValueError("weight array and coefficient array differ in length")
        if np.any(w <= 0):
            raise ValueError("weights must be positive")
        logw = np.log(w)
    nz = c != 0
    if not np.any(nz):
        return 0.0
    if logw.max() < _LOG_MAX:
        t = np.abs(c[nz] * np.exp(logw[nz]))
        if np.all(np.isfinite(t)):
            m = t.max()
            if p == math.inf or m == 0.0:
                return float(m)
            return float(m * np.sum((t / m) ** p) ** (1.0 / p))
    logterms = np.log(np.abs(c[nz])) + logw[nz]
    top = logterms.max()
    if p == math.inf:
        return _exp_checked(top)
    # factor out the largest term before summing to keep everything in range
    total = np.sum(np.exp(p * (logterms - top)))
    return _exp_checked(top + math.log(total) / p)


def _exp_checked(x: float) -> float:
    if x > _LOG_MAX:
        raise WeightOverflowError("weighted norm overflows")
    return math.exp(x)


# ---------------------------------------------------------------------------
# class estimation


@dataclass(frozen=True)
class ClassCandidate:
    kind: str
    param: float | None = None  # s for exp, sigma for flat

    def __str__(self):
        if self.kind == EXP:
            return f"exp:s={self.param:g}"
        if self.kind == FLAT:
            return f"flat:sigma={self.param:g}"
        return "poly"


def parse_candidate(text: str) -> ClassCandidate:
    kind, *fields = text.strip().split(":")
    params = _parse_fields(fields, text)
    if kind == EXP:
        return ClassCandidate(EXP, params["s"])
    if kind == FLAT:
        return ClassCandidate(FLAT, params["sigma"])
    if kind == POLY:
        return ClassCandidate(POLY)
    raise ValueError(f"unknown class kind in {text!r}")


def default_candidates(grid: Sequence[float] = DEFAULT_GRID) -> list[ClassCandidate]:
    return (
        [ClassCandidate(EXP, s) for s in grid]
        + [ClassCandidate(FLAT, s) for s in grid]
        + [ClassCandidate(POLY)]
    )


@dataclass(frozen=True)
class ClassEstimate:
    """Result of fitting one decay template to a kernel.

    ``rate`` is r for exp classes (labelled Roumieu), the base R of the bound
    ``|a| <~ R^(|alpha|+|beta|) (alpha! beta!)^(-1/(2 sigma))`` for flat classes,
    and the order N for the Schwartz template.  ``sup_constant`` is
    ``sup |a| theta(alpha) theta(beta)`` for the fitted weight, attained at
    ``argmax`` (row rank, column rank).
    """

    label: str
    candidate: ClassCandidate
    rate: float
    residual: float
    sup_constant: float
    argmax: tuple[int, int]
    n_points: int

    @property
    def member(self) -> bool:
        """True when the fitted template actually decays."""
        if self.candidate.kind == FLAT:
            return True
        return self.rate > 1e-8

    def weight(self) -> WeightSpec:
        c = self.candidate
        if c.kind == EXP:
            return WeightSpec.exponential(c.param, self.rate)
        if c.kind == FLAT:
            return WeightSpec.flat(c.param, 1.0 / self.rate)
        return WeightSpec.polynomial(self.rate)


FIT_FLOOR = 1e3 * np.finfo(float).eps


def _significant_entries(A: np.ndarray):
    absA = np.abs(A)
    top = absA.max() if absA.size else 0.0
    if not np.isfinite(top):
        raise ValueError("kernel has non-finite entries")
    if top == 0.0:
        raise EffectivelyZeroKernel("effectively zero kernel: every entry is below the fit floor")
    mask = absA >= FIT_FLOOR * top
    return mask


def sup_constant(entries: np.ndarray, rows: np.ndarray, cols: np.ndarray,
                 weight_rows: WeightSpec, weight_cols: WeightSpec | None = None,
                 mask: np.ndarray | None = None) -> tuple[float, tuple[int, int]]:
    """sup |a_{alpha,beta}| theta_rows(alpha) theta_cols(beta), with its argmax."""
    weight_cols = weight_rows if weight_cols is None else weight_cols
    A = np.asarray(entries, dtype=float)
    with np.errstate(divide="ignore"):
        loga = np.log(np.abs(A))
    logw = weight_rows.log_values(rows)[:, None] + weight_cols.log_values(cols)[None, :]
    total = loga + logw
    if mask is not None:
        total = np.where(mask, total, -np.inf)
    flat_i = int(np.argmax(total))
    i, j = np.unravel_index(flat_i, total.shape)
    best = total[i, j]
    if best == -np.inf:
        return 0.0, (0, 0)
    return _exp_checked(best), (int(i), int(j))


def _lstsq_line(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Fit y = c0 + slope * x; return (c0, slope, rms residual)."""
    if np.ptp(x) == 0:
        c0 = float(np.mean(y))
        return c0, 0.0, float(np.sqrt(np.mean((y - c0) ** 2)))
    X = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    res = y - X @ coef
    return float(coef[0]), float(coef[1]), float(np.sqrt(np.mean(res**2)))


def fit_candidate(K, candidate: ClassCandidate) -> ClassEstimate:
    """Least-squares fit of log|a| against one class template."""
    A = K.entries
    mask = _significant_entries(A)
    rows, cols = K.out_map.indices, K.in_map.indices
    ia, ib = np.nonzero(mask)
    y = np.log(np.abs(A[ia, ib]))
    deg_r = rows.sum(axis=1).astype(float)
    deg_c = cols.sum(axis=1).astype(float)
    if candidate.kind == EXP:
        e = 1.0 / (2.0 * candidate.param)
        x = deg_r[ia] ** e + deg_c[ib] ** e
        _, slope, res = _lstsq_line(x, y)
        rate = -slope
        weight = WeightSpec.exponential(candidate.param, rate)
    elif candidate.kind == FLAT:
        sig = candidate.param
        lf_r = K.out_map.log_factorials
        lf_c = K.in_map.log_factorials
        yy = y + (lf_r[ia] + lf_c[ib]) / (2.0 * sig)
        x = deg_r[ia] + deg_c[ib]
        _, slope, res = _lstsq_line(x, yy)
        rate = math.exp(slope)
        weight = WeightSpec.flat(sig, 1.0 / rate)
    else:
        x = 0.5 * np.log1p((rows[ia] ** 2).sum(axis=1) + (cols[ib] ** 2).sum(axis=1))
        _, slope, res = _lstsq_line(x, y)
        rate = -slope
        weight = None
    if weight is None:
        # joint Schwartz weight <(alpha, beta)>^N does not split into row and column factors
        joint = 0.5 * rate * np.log1p((rows**2).sum(axis=1)[:, None] + (cols**2).sum(axis=1)[None, :])
        with np.errstate(divide="ignore"):
            total = np.where(mask, np.log(np.abs(A)) + joint, -np.inf)
        i, j = np.unravel_index(int(np.argmax(total)), total.shape)
        sup, arg = _exp_checked(total[i, j]), (int(i), int(j))
    else:
        sup, arg = sup_constant(A, rows, cols, weight, mask=mask)
    if candidate.kind == EXP:
        label = f"Roumieu(s={candidate.param:g})"
    elif candidate.kind == FLAT:
        label = f"FlatRoumieu(sigma={candidate.param:g})"
    else:
        label = "Schwartz"
    return ClassEstimate(label, candidate, float(rate), res, sup, arg, int(ia.size))


def fit_all(K, candidates: Sequence[ClassCandidate] | None = None) -> list[ClassEstimate]:
    if min(K.N1, K.N2) < 4:
        raise ValueError("class fitting needs truncation degree >= 4 on both sides")
    cands = default_candidates() if candidates is None else list(candidates)
    return [fit_candidate(K, c) for c in cands]


def fit_class(K, candidates: Sequence[ClassCandidate] | None = None) -> ClassEstimate:
    """Best-fitting class among ``candidates`` (smallest log-domain RMS residual).

    Ties within 1e-12 go to the earlier candidate.  Beurling and Roumieu
    classes cannot be told apart from finite data; exp fits are labelled
    Roumieu.
    """
    fits = fit_all(K, candidates)
    best = fits[0]
    for f in fits[1:]:
        if f.residual < best.residual - 1e-12:
            best = f
    return best
