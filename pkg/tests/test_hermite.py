import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.polynomial.hermite import hermgauss

from hermkern.hermite import (
    AnalysisError,
    CoeffVector,
    analyze,
    apply_harmonic_oscillator,
    basis_values,
    gauss_hermite,
    hermite_eval,
    hermite_table,
    oscillator_eigenvalues,
    synthesize,
)
from hermkern.multiindex import GradedIndexMap


def mp_hermite_function(n, x):
    # physicists' H_n with the orthonormal prefactor, in 50-digit arithmetic
    mpmath.mp.dps = 50
    x = mpmath.mpf(x)
    norm = mpmath.sqrt(mpmath.power(2, n) * mpmath.factorial(n) * mpmath.sqrt(mpmath.pi))
    return float(mpmath.hermite(n, x) * mpmath.exp(-x * x / 2) / norm)


def test_seed_values():
    assert hermite_eval(0, 0.0) == pytest.approx(math.pi**-0.25, rel=1e-15)
    assert hermite_eval(0, 0.0) == pytest.approx(0.751125544, abs=1e-9)
    assert hermite_eval(1, 0.0) == 0.0


@pytest.mark.parametrize("n", [0, 1, 2, 5, 17, 40])
@pytest.mark.parametrize("x", [-3.7, -0.2, 0.0, 1.1, 6.5])
def test_recurrence_matches_closed_form(n, x):
    assert hermite_eval(n, x) == pytest.approx(mp_hermite_function(n, x), rel=1e-12, abs=1e-15)


def test_recurrence_bounded():
    x = np.linspace(-10, 10, 2001)
    assert np.abs(hermite_table(60, x)).max() <= 1.1


def test_normalization_by_quadrature():
    rule = gauss_hermite(64)
    tab = hermite_table(20, rule.nodes)
    norms = (tab**2) @ rule.scaled_weights
    assert np.max(np.abs(norms - 1)) <= 1e-12


@pytest.mark.parametrize("N", [0, 5, 20])
def test_gram_matrix_is_identity(N):
    rule = gauss_hermite(N + 1)
    tab = hermite_table(N, rule.nodes)
    G = (tab * rule.scaled_weights) @ tab.T
    assert np.max(np.abs(G - np.eye(N + 1))) <= 1e-12


def test_quadrature_small_orders():
    r1 = gauss_hermite(1)
    assert r1.nodes.tolist() == [0.0]
    assert r1.weights[0] == pytest.approx(math.sqrt(math.pi), rel=1e-15)
    r2 = gauss_hermite(2)
    assert r2.nodes == pytest.approx([-1 / math.sqrt(2), 1 / math.sqrt(2)], rel=1e-15)
    assert r2.weights == pytest.approx([math.sqrt(math.pi) / 2] * 2, rel=1e-15)


@pytest.mark.parametrize("M", [3, 10, 64, 150, 256])
def test_quadrature_against_numpy(M):
    rule = gauss_hermite(M)
    x, w = hermgauss(M)
    assert np.max(np.abs(rule.nodes - x)) <= 1e-12 * max(1, np.abs(x).max())
    # numpy's small weights lose relative accuracy; compare where both are meaningful
    big = w > 1e-200
    assert np.allclose(rule.weights[big], w[big], rtol=1e-10, atol=0)
    assert abs(rule.weights.sum() - math.sqrt(math.pi)) <= 1e-13 * math.sqrt(math.pi)
    assert np.all(np.diff(rule.nodes) > 0)
    assert np.array_equal(rule.nodes, -rule.nodes[::-1])


@pytest.mark.parametrize("M", [4, 9, 16])
def test_quadrature_monomial_exactness(M):
    rule = gauss_hermite(M)
    for k in range(2 * M):
        scale = math.gamma((k + 1) / 2)  # integral of |x|^k e^(-x^2)
        exact = 0.0 if k % 2 else scale
        got = rule.integrate(lambda x: x**k)
        assert abs(got - exact) <= 1e-13 * scale


def test_second_moment_m64():
    assert gauss_hermite(64).integrate(lambda x: x * x) == pytest.approx(math.sqrt(math.pi) / 2, rel=1e-13)


@pytest.mark.parametrize("M", [0, 257, 2.5])
def test_quadrature_order_range(M):
    with pytest.raises(ValueError):
        gauss_hermite(M)


def test_analyze_single_hermite_function():
    c = analyze(lambda x: hermite_eval(3, x), 1, 5, 16)
    assert np.max(np.abs(c.values - np.eye(6)[3])) <= 1e-12


def test_analyze_zero_function():
    c = analyze(lambda x, y: np.zeros_like(x), 2, 4)
    assert not np.any(c.values)


def test_analyze_reports_bad_node():
    with pytest.raises(AnalysisError, match="node"), np.errstate(divide="ignore"):
        analyze(lambda x: 1.0 / x, 1, 4, 5)


@pytest.mark.parametrize("d,N", [(1, 8), (2, 5), (3, 3)])
def test_synthesize_analyze_round_trip(rng, d, N):
    c = CoeffVector(d, N, rng.standard_normal(GradedIndexMap(d, N).size))
    back = analyze(lambda *xs: synthesize(c, np.column_stack(xs)), d, N, 2 * N + 16)
    assert np.max(np.abs(back.values - c.values)) <= 1e-12


def test_synthesize_unit_and_zero():
    c = CoeffVector.unit(2, 3, (1, 2))
    x = np.array([0.3, -1.2])
    assert synthesize(c, x) == pytest.approx(hermite_eval(1, 0.3) * hermite_eval(2, -1.2), rel=1e-14)
    assert synthesize(CoeffVector.zeros(2, 3), x) == 0.0


def test_basis_values_shape():
    B = basis_values(2, 3, np.zeros((4, 2)))
    assert B.shape == (4, 10)


def test_harmonic_oscillator_examples():
    c = CoeffVector.unit(1, 4, (0,))
    assert np.array_equal(apply_harmonic_oscillator(c, 0).values, c.values)
    assert np.array_equal(apply_harmonic_oscillator(c, 3).values, c.values)
    c2 = CoeffVector.unit(2, 3, (1, 1))
    out = apply_harmonic_oscillator(c2, 2)
    assert out.values[GradedIndexMap(2, 3).rank((1, 1))] == 36.0
    with pytest.raises(OverflowError):
        apply_harmonic_oscillator(CoeffVector.unit(1, 10, (10,)), 400)


@given(st.integers(1, 3), st.integers(0, 6), st.data())
def test_eigenfunctions_are_eigenvectors(d, N, data):
    gm = GradedIndexMap(d, N)
    alpha = tuple(gm.indices[data.draw(st.integers(0, gm.size - 1))])
    c = CoeffVector.unit(d, N, alpha)
    out = apply_harmonic_oscillator(c, 1)
    assert np.array_equal(out.values, (2 * sum(alpha) + d) * c.values)
    assert oscillator_eigenvalues(d, N)[gm.rank(alpha)] == 2 * sum(alpha) + d


def test_coeffvector_validation():
    with pytest.raises(ValueError):
        CoeffVector(1, 3, np.zeros(3))
    with pytest.raises(ValueError):
        CoeffVector(1, 1, [0.0, math.inf])
    v = CoeffVector.unit(1, 2, (1,)).padded(4)
    assert v.values.tolist() == [0.0, 1.0, 0.0, 0.0, 0.0]
