"""Reference kernels with known class membership or known spectra."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .hermite import analyze
from .kernel_ops import KernelMatrix
from .multiindex import GradedIndexMap, count
from .weights import POLY, WeightSpec, format_weight, parse_weight

#: bit generator used for every random kernel; recorded in file metadata
RNG_NAME = "numpy.PCG64"


def gen_semigroup(d: int, t: float, N: int) -> KernelMatrix:
    """Kernel of exp(-tH): diagonal with entries exp(-t(2|alpha| + d))."""
    if not t > 0:
        raise ValueError("semigroup time t must be positive")
    deg = GradedIndexMap(d, N).degrees
    return KernelMatrix.diagonal(d, N, np.exp(-t * (2.0 * deg + d)))


def semigroup_spectrum(d: int, t: float, N: int) -> np.ndarray:
    """Closed-form singular values of gen_semigroup, non-increasing, with multiplicities."""
    deg = np.repeat(np.arange(N + 1), [math.comb(n + d - 1, d - 1) for n in range(N + 1)])
    return np.exp(-t * (2.0 * deg + d))


def gen_random_class(weight: WeightSpec, d1: int, d2: int, N1: int, N2: int | None = None,
                     seed: int = 0, signed: bool = False) -> KernelMatrix:
    """a_{alpha,beta} = u_{alpha,beta} / (theta(alpha) theta(beta)), u uniform on [1/2, 1].

    For the polynomial family the joint weight <(alpha, beta)>^r is used, matching
    the Schwartz template.  The realized sup-constant is at most 1.
    """
    N2 = N1 if N2 is None else N2
    rows = GradedIndexMap(d2, N2).indices
    cols = GradedIndexMap(d1, N1).indices
    rng = np.random.Generator(np.random.PCG64(seed))
    u = rng.uniform(0.5, 1.0, size=(rows.shape[0], cols.shape[0]))
    if signed:
        u *= rng.choice([-1.0, 1.0], size=u.shape)
    if weight.kind == POLY:
        sq = (rows**2).sum(axis=1)[:, None] + (cols**2).sum(axis=1)[None, :]
        logw = 0.5 * weight.r * np.log1p(sq)
    else:
        logw = weight.log_values(rows)[:, None] + weight.log_values(cols)[None, :]
    return KernelMatrix(d1, d2, N1, N2, u * np.exp(-logw))


def gen_rank1(d1: int, d2: int, N1: int, N2: int, alpha, beta, lam: float = 1.0) -> KernelMatrix:
    """lam * h_alpha (x) h_beta: a single nonzero entry."""
    K = np.zeros((count(d2, N2), count(d1, N1)))
    K[GradedIndexMap(d2, N2).rank(alpha), GradedIndexMap(d1, N1).rank(beta)] = lam
    return KernelMatrix(d1, d2, N1, N2, K)


def gen_schwartz(d1: int, d2: int, N: int, order: float) -> KernelMatrix:
    """a_{alpha,beta} = <(alpha, beta)>^(-order), <x> = (1 + |x|^2)^(1/2)."""
    if order < 0:
        raise ValueError("order must be non-negative")
    rows = GradedIndexMap(d2, N).indices
    cols = GradedIndexMap(d1, N).indices
    sq = (rows**2).sum(axis=1)[:, None] + (cols**2).sum(axis=1)[None, :]
    return KernelMatrix(d1, d2, N, N, (1.0 + sq) ** (-0.5 * order))


def mehler_kernel(t: float):
    """Closed form of sum_n exp(-t(2n+1)) h_n(x) h_n(y) on R x R."""
    rho = math.exp(-2.0 * t)
    one_m = -math.expm1(-4.0 * t)  # 1 - rho^2
    pref = math.exp(-t) / math.sqrt(math.pi * one_m)

    def K(x, y):
        return pref * np.exp(-((1.0 + rho * rho) * (x * x + y * y) - 4.0 * rho * x * y) / (2.0 * one_m))

    return K


def gen_mehler_closed_form(t: float, N: int, M: int | None = None) -> KernelMatrix:
    """Hermite coefficients of the closed-form heat kernel, by 2-d Gauss-Hermite analysis (d = 1)."""
    if not t > 0:
        raise ValueError("t must be positive")
    M = 2 * N + 8 if M is None else M
    if M < 2 * N + 8:
        raise ValueError(f"quadrature order M={M} too small; need M >= 2N+8 = {2 * N + 8}")
    # the square block alpha, beta <= N sits inside the 2-d truncation of degree 2N
    c = analyze(mehler_kernel(t), 2, 2 * N, M)
    idx = GradedIndexMap(2, 2 * N).indices
    sel = (idx[:, 0] <= N) & (idx[:, 1] <= N)
    full = np.zeros((N + 1, N + 1))
    full[idx[sel, 0], idx[sel, 1]] = c.values[sel]
    return KernelMatrix(1, 1, N, N, full)


# ---------------------------------------------------------------------------
# textual generator specs


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    params: dict = field(default_factory=dict)

    def build(self, d1: int = 1, d2: int | None = None, N1: int = 16, N2: int | None = None) -> KernelMatrix:
        d2 = d1 if d2 is None else d2
        N2 = N1 if N2 is None else N2
        p = self.params
        if self.kind == "semigroup":
            if d1 != d2 or N1 != N2:
                raise ValueError("semigroup kernels are square")
            return gen_semigroup(d1, p["t"], N1)
        if self.kind == "random":
            return gen_random_class(p["weight"], d1, d2, N1, N2, seed=int(p.get("seed", 0)),
                                    signed=bool(p.get("signed", False)))
        if self.kind == "schwartz":
            if N1 != N2:
                raise ValueError("schwartz generator uses one truncation degree")
            return gen_schwartz(d1, d2, N1, p["order"])
        if self.kind == "mehler":
            if (d1, d2) != (1, 1) or N1 != N2:
                raise ValueError("mehler generator is one-dimensional and square")
            return gen_mehler_closed_form(p["t"], N1, int(p["M"]) if "M" in p else None)
        if self.kind == "rank1":
            return gen_rank1(d1, d2, N1, N2, p["alpha"], p["beta"], p.get("lam", 1.0))
        raise ValueError(f"unknown generator kind {self.kind!r}")

    def __str__(self):
        return format_generator(self)


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(","))


def parse_generator(text: str) -> GeneratorSpec:
    """Parse ``semigroup:t=0.5``, ``random:exp:s=1:r=2:seed=42``, ``schwartz:order=6``,
    ``mehler:t=0.5:M=64`` or ``rank1:alpha=1:beta=0:lam=2`` (multi-indices comma separated)."""
    kind, _, rest = text.strip().partition(":")
    if kind == "random":
        parts = rest.split(":")
        extra = {}
        keep = []
        for f in parts:
            key, _, val = f.partition("=")
            if key in ("seed", "signed"):
                extra[key] = int(val)
            else:
                keep.append(f)
        return GeneratorSpec("random", {"weight": parse_weight(":".join(keep)), **extra})
    fields = {}
    for f in filter(None, rest.split(":")):
        key, sep, val = f.partition("=")
        if not sep:
            raise ValueError(f"malformed field {f!r} in generator {text!r}")
        fields[key] = _ints(val) if key in ("alpha", "beta") else float(val)
    required = {"semigroup": ("t",), "schwartz": ("order",), "mehler": ("t",), "rank1": ("alpha", "beta")}
    if kind not in required:
        raise ValueError(f"unknown generator kind in {text!r}")
    for key in required[kind]:
        if key not in fields:
            raise ValueError(f"generator {text!r} is missing {key!r}")
    return GeneratorSpec(kind, fields)


def format_generator(spec: GeneratorSpec) -> str:
    p = dict(spec.params)
    if spec.kind == "random":
        out = "random:" + format_weight(p.pop("weight"))
        return out + "".join(f":{k}={v}" for k, v in sorted(p.items()))
    parts = []
    for k, v in p.items():
        if isinstance(v, tuple):
            v = ",".join(map(str, v))
        elif isinstance(v, float) and v.is_integer():
            v = int(v)
        parts.append(f"{k}={v}")
    return ":".join([spec.kind] + parts)
