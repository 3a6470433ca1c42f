import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fopi.errors import DenominatorZero
from fopi.quasipoly import (
    FractionalTransferFunction,
    PiLambdaController,
    QuasiPolynomial,
    controller_eval,
    focq,
    qp_eval,
    s_power_jw,
    tf_eval,
)

coef = st.floats(-10, 10, allow_nan=False).filter(lambda c: abs(c) > 1e-3)
# exponents on a 0.01 lattice: nearby values would be merged by design
expo = st.integers(0, 400).map(lambda k: k / 100)
omega = st.floats(1e-3, 1e3)
qpolys = st.lists(st.tuples(coef, expo), min_size=1, max_size=5).map(QuasiPolynomial)


def test_s_power_examples():
    assert s_power_jw(1, 2.0) == 2j
    assert s_power_jw(0, 7.3) == 1
    assert abs(s_power_jw(0.5, 4.0) - cmath.sqrt(4j)) < 1e-12


def test_s_power_rejects_bad_input():
    with pytest.raises(ValueError):
        s_power_jw(0.5, 0.0)
    with pytest.raises(ValueError):
        s_power_jw(-1.0, 1.0)
    with pytest.raises(ValueError):
        s_power_jw(float("nan"), 1.0)


@given(st.floats(0, 4), omega)
def test_s_power_modulus_and_argument(a, w):
    z = s_power_jw(a, w)
    assert math.isclose(abs(z), w**a, rel_tol=1e-12)
    if z != 0:
        # compare on the unit circle to avoid the +-pi seam
        assert abs(z / abs(z) - cmath.exp(1j * a * math.pi / 2)) < 1e-12


def test_s_power_vectorized():
    w = np.array([0.5, 1.0, 2.0])
    out = s_power_jw(1.2, w)
    assert out.shape == (3,)
    assert np.allclose(out, [s_power_jw(1.2, x) for x in w], rtol=1e-14)


def test_qp_eval_examples():
    assert qp_eval(QuasiPolynomial([(1.0, 0.0)]), 5.0) == 1
    den = QuasiPolynomial.from_poly([0.001025, 1.367, 1.0])
    assert abs(qp_eval(den, 1.0) - (0.998975 + 1.367j)) < 1e-12
    z = qp_eval(QuasiPolynomial([(2.0, 1.2)]), 1.0)
    assert abs(z - (2 * math.cos(0.6 * math.pi) + 2j * math.sin(0.6 * math.pi))) < 1e-12


def test_merge_and_canonical_form():
    p = QuasiPolynomial([(1.0, 1.2), (2.0, 1.2 + 1e-12), (3.0, 0.0), (0.0, 5.0)])
    assert p.terms == ((3.0, 0.0), (3.0, 1.2))
    assert (p - p).is_zero()
    assert p == QuasiPolynomial([(3.0, 1.2), (3.0, 0.0)])


def test_parse_roundtrip():
    p = QuasiPolynomial([(1e-5, 3.2), (-1.367, 2.2), (3.6, 1.2), (1.467, 0.0)])
    assert QuasiPolynomial.parse(str(p)) == p
    with pytest.raises(ValueError):
        QuasiPolynomial.parse("1*s^x")


@given(qpolys, qpolys, omega)
def test_qp_eval_linear(p, q, w):
    lhs = qp_eval(p + q, w)
    rhs = qp_eval(p, w) + qp_eval(q, w)
    scale = sum(abs(c) * w**e for c, e in p.terms + q.terms)
    assert abs(lhs - rhs) <= 1e-12 * max(scale, 1.0)


@given(qpolys, qpolys, omega)
@settings(max_examples=50)
def test_qp_eval_multiplicative(p, q, w):
    lhs = qp_eval(p * q, w)
    rhs = qp_eval(p, w) * qp_eval(q, w)
    scale = sum(abs(c) * w**e for c, e in p.terms) * sum(abs(c) * w**e for c, e in q.terms)
    assert abs(lhs - rhs) <= 1e-11 * max(scale, 1.0)


def test_integer_polynomial_matches_polyval():
    rng = np.random.default_rng(0)
    for _ in range(100):
        c = rng.normal(size=rng.integers(1, 7))
        w = 10 ** rng.uniform(-2, 2)
        got = qp_eval(QuasiPolynomial.from_poly(c), w)
        want = np.polyval(c, 1j * w)
        assert abs(got - want) <= 1e-12 * max(1.0, np.sum(np.abs(c) * w ** np.arange(len(c))[::-1]))


def test_tf_eval(plant):
    assert abs(abs(tf_eval(plant, 1e-6)) - 1.0105) < 1e-4
    integ = FractionalTransferFunction(QuasiPolynomial([(1.0, 0.0)]), QuasiPolynomial([(1.0, 1.0)]))
    assert abs(tf_eval(integ, 1.0) - (-1j)) < 1e-15
    w = 10.0
    s = 1j * w
    want = plant.num.coefficient(0) / (plant.den.coefficient(2) * s**2 + plant.den.coefficient(1) * s + 1)
    assert abs(tf_eval(plant, w) - want) < 1e-14


def test_tf_eval_denominator_zero():
    # s^2 + 1 vanishes at omega = 1
    g = FractionalTransferFunction(QuasiPolynomial([(1.0, 0.0)]), QuasiPolynomial.from_poly([1.0, 0.0, 1.0]))
    with pytest.raises(DenominatorZero):
        tf_eval(g, 1.0)


def test_improper_rejected():
    with pytest.raises(ValueError):
        FractionalTransferFunction(QuasiPolynomial([(1.0, 2.0)]), QuasiPolynomial([(1.0, 1.0)]))


def test_controller_eval(fo):
    assert controller_eval(PiLambdaController(1.0, 0.0, 0.7), 3.0) == 1
    assert abs(controller_eval(PiLambdaController(0.0, 1.0, 1.0), 2.0) - (-0.5j)) < 1e-15
    want = 2.5732 + 1.45204 * (math.cos(0.6 * math.pi) - 1j * math.sin(0.6 * math.pi))
    assert abs(controller_eval(fo, 1.0) - want) < 1e-12


@pytest.mark.parametrize("lam", [0.0, 2.0, -0.5, 2.5])
def test_controller_lambda_range(lam):
    with pytest.raises(ValueError):
        PiLambdaController(1.0, 1.0, lam)


def test_focq_examples(first_order, plant, fo):
    assert focq(first_order, PiLambdaController(1.0, 1.0, 1.0)) == QuasiPolynomial.from_poly([1, 2, 1])
    p = focq(plant, fo)
    a2, a1 = plant.den.coefficient(2), plant.den.coefficient(1)
    n0 = plant.num.coefficient(0)
    want = QuasiPolynomial([(a2, 3.2), (a1, 2.2), (1 + n0 * 2.5732, 1.2), (n0 * 1.45204, 0.0)])
    assert p.exponents.tolist() == pytest.approx([0.0, 1.2, 2.2, 3.2])
    assert np.allclose(p.coeffs, want.coeffs, rtol=1e-14)
    assert focq(plant, PiLambdaController(0.0, 0.0, 1.2)) == plant.den.shift(1.2)


def test_focq_integer_reduction(plant):
    rng = np.random.default_rng(1)
    for _ in range(20):
        kp, ki = rng.uniform(-3, 3, size=2)
        d = np.array([plant.den.coefficient(e) for e in (2, 1, 0)])
        n0 = plant.num.coefficient(0)
        classical = np.polyadd(np.append(d, 0.0), [kp * n0, ki * n0])
        got = focq(plant, PiLambdaController(kp, ki, 1.0))
        assert got == QuasiPolynomial.from_poly(classical)


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0.1, 1.9), omega)
@settings(max_examples=50)
def test_focq_is_closed_loop_denominator(kp, ki, lam, w):
    # D s^lam + N (kp s^lam + ki) = s^lam D (1 + C G)
    from fopi import BENCH_MOTOR, derive_tf

    g = derive_tf(BENCH_MOTOR)
    c = PiLambdaController(kp, ki, lam)
    lhs = qp_eval(focq(g, c), w)
    rhs = s_power_jw(lam, w) * qp_eval(g.den, w) * (1 + controller_eval(c, w) * tf_eval(g, w))
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(rhs), w ** (lam + 2))
