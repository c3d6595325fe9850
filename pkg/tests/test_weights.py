import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from hermkern.generators import gen_random_class, gen_semigroup
from hermkern.kernel_ops import KernelMatrix
from hermkern.multiindex import GradedIndexMap
from hermkern.weights import (
    EXP,
    FLAT,
    ClassCandidate,
    EffectivelyZeroKernel,
    WeightOverflowError,
    WeightSpec,
    default_candidates,
    fit_candidate,
    fit_class,
    format_weight,
    parse_candidate,
    parse_weight,
    weight_value,
    weighted_norm,
)

specs = st.one_of(
    st.builds(WeightSpec.exponential, st.floats(0.25, 3), st.floats(-3, 3)),
    st.builds(WeightSpec.flat, st.floats(0.25, 3), st.floats(0.1, 5)),
    st.builds(WeightSpec.polynomial, st.floats(-6, 6)),
)


def test_exp_weight_example():
    assert weight_value(WeightSpec.exponential(0.5, 1.0), (2, 2)) == pytest.approx(math.e**4, rel=1e-15)


def test_flat_weight_example():
    assert weight_value(WeightSpec.flat(1.0, 2.0), (1, 1)) == pytest.approx(4.0, rel=1e-15)


@given(st.floats(0.1, 5), st.floats(-5, 5), st.integers(1, 4))
def test_exp_weight_at_zero_is_one(s, r, d):
    assert weight_value(WeightSpec.exponential(s, r), (0,) * d) == 1.0


def test_flat_weight_uses_log_gamma_beyond_factorial_range():
    # 200! overflows a double, (200!)^(1/4) does not
    w = weight_value(WeightSpec.flat(2.0, 1.0), (200,))
    assert w == pytest.approx(math.exp(math.lgamma(201) / 4), rel=1e-12)


def test_weight_overflow_names_the_index():
    with pytest.raises(WeightOverflowError) as exc:
        weight_value(WeightSpec.exponential(0.5, 10.0), (50, 50))
    assert exc.value.alpha == (50, 50)


@given(specs, st.integers(1, 3), st.integers(0, 6))
def test_dual_weight_is_reciprocal(spec, d, N):
    idx = GradedIndexMap(d, N).indices
    prod = spec.log_values(idx) + spec.dual().log_values(idx)
    assert np.allclose(prod, 0.0, atol=1e-12)


@pytest.mark.parametrize("text", ["exp:s=1:r=0.5", "flat:sigma=1:r=2", "poly:r=4"])
def test_weight_text_round_trip(text):
    assert format_weight(parse_weight(text)) == text


@pytest.mark.parametrize("text", ["exp:r=1", "gauss:r=1", "flat:sigma=1", "poly:r"])
def test_bad_weight_text(text):
    with pytest.raises(ValueError):
        parse_weight(text)


def test_weighted_norm_examples():
    assert weighted_norm([1.0, 0.0, 0.0], None, p=math.inf) == 1.0
    assert weighted_norm([1.0, 1.0], [1.0, math.e], p=1) == pytest.approx(1 + math.e, rel=1e-15)
    assert weighted_norm([], None) == 0.0
    with pytest.raises(ValueError):
        weighted_norm([1.0, math.nan])


@given(arrays(float, st.integers(1, 30), elements=st.floats(-1e3, 1e3)), st.floats(0.5, 4))
def test_weighted_norm_matches_direct_sum(c, p):
    m = max(abs(v) for v in c)
    # factor out the largest entry so the oracle itself does not underflow
    direct = m * sum((abs(v) / m) ** p for v in c) ** (1 / p) if m > 0 else 0.0
    assert weighted_norm(c, None, p=p) == pytest.approx(direct, rel=1e-13, abs=1e-300)


def test_weighted_norm_random_p2(rng):
    c = rng.standard_normal(21)
    spec = WeightSpec.exponential(1.0, 0.7)
    w = np.exp(spec.log_values(GradedIndexMap(1, 20).indices))
    direct = math.sqrt(sum((a * b) ** 2 for a, b in zip(c, w)))
    assert weighted_norm(c, spec, p=2) == pytest.approx(direct, rel=1e-14)


@given(arrays(float, 10, elements=st.floats(-10, 10)), st.floats(-50, 50), st.sampled_from([1.0, 2.0, math.inf]))
def test_weighted_norm_homogeneous(c, lam, p):
    spec = WeightSpec.exponential(0.5, 0.3)
    base = weighted_norm(c, spec, p=p)
    assert weighted_norm(lam * c, spec, p=p) == pytest.approx(abs(lam) * base, rel=4e-16 * 10, abs=1e-300)


@given(arrays(float, 15, elements=st.floats(0, 10)), st.floats(0, 2), st.floats(0, 2))
def test_weighted_norm_monotone_in_rate(c, r, dr):
    lo = weighted_norm(c, WeightSpec.exponential(1.0, r), p=2)
    hi = weighted_norm(c, WeightSpec.exponential(1.0, r + dr), p=2)
    assert hi >= lo * (1 - 1e-15)


def test_weighted_norm_log_domain_path():
    # theta overflows, c theta does not
    c = np.zeros(11)
    c[10] = 1e-300
    spec = WeightSpec.exponential(0.5, 100.0)
    assert weighted_norm(c, spec, p=2) == pytest.approx(math.exp(1000.0 + math.log(1e-300)), rel=1e-12)


# ---------------------------------------------------------------------------


def test_fit_class_semigroup_selects_exp_half():
    est = fit_class(gen_semigroup(1, 0.5, 20))
    assert est.candidate == ClassCandidate(EXP, 0.5)
    # a = exp(-t(2n+1)) = e^-t exp(-t(|alpha| + |beta|)) on the diagonal, so r = t
    assert est.rate == pytest.approx(0.5, rel=0.05)
    assert est.member


def test_fit_class_identity_has_no_decay():
    K = KernelMatrix.identity(1, 10)
    est = fit_class(K)
    assert est.candidate.kind == EXP and abs(est.rate) < 1e-10 and not est.member
    poly = fit_candidate(K, ClassCandidate("poly"))
    assert abs(poly.rate) < 1e-10


def test_single_entry_sup_constant_is_one():
    A = np.zeros((5, 5))
    A[0, 0] = 1.0
    K = KernelMatrix(1, 1, 4, 4, A)
    for c in default_candidates():
        est = fit_candidate(K, c)
        assert est.sup_constant == pytest.approx(1.0, rel=1e-15)
        assert est.argmax == (0, 0)


def test_effectively_zero_kernel():
    with pytest.raises(EffectivelyZeroKernel, match="effectively zero kernel"):
        fit_class(KernelMatrix.zeros(1, 1, 5, 5))


def test_fit_needs_degree_four():
    with pytest.raises(ValueError):
        fit_class(gen_semigroup(1, 0.5, 3))


@pytest.mark.parametrize("s,r", [(0.5, 1.0), (1.0, 2.0), (2.0, 3.0)])
def test_fit_class_recovers_generated_exp_class(s, r):
    K = gen_random_class(WeightSpec.exponential(s, r), 1, 1, 16, seed=7)
    est = fit_class(K)
    assert est.candidate == ClassCandidate(EXP, s)
    assert est.rate == pytest.approx(r, rel=0.10)
    assert est.sup_constant <= 1.0 * (1 + 1e-12) or est.rate > r


def test_fit_class_recovers_flat_class():
    K = gen_random_class(WeightSpec.flat(1.0, 2.0), 1, 1, 16, seed=3)
    est = fit_class(K)
    assert est.candidate == ClassCandidate(FLAT, 1.0)
    # fitted base R = 1/r
    assert est.rate == pytest.approx(0.5, rel=0.10)


def test_candidate_text():
    assert parse_candidate("exp:s=0.5") == ClassCandidate(EXP, 0.5)
    assert str(parse_candidate("flat:sigma=2")) == "flat:sigma=2"
    assert str(parse_candidate("poly")) == "poly"
