import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from unitonkit.errors import ParseError, PoleAtPoint, SingularMatrixFunction
from unitonkit.exactalg import (
    BiPoly,
    GaussRational,
    MatRF,
    RatFunc,
    mat_adjoint,
    mat_inverse,
    mat_ops,
    rf_arith,
    rf_bar,
    rf_eq,
    rf_eval,
    rf_partial,
)


def P(num, den="1"):
    return RatFunc.parse(num, den)


# -- worked examples ---------------------------------------------------------


def test_additive_identity():
    f = P("z", "1+z*w")
    assert rf_eq(rf_arith(f, RatFunc(0), "add"), f)


def test_cancellation_by_cross_multiplication():
    out = rf_arith(P("z", "1+z*w"), P("1+z*w"), "mul")
    assert rf_eq(out, P("z"))


def test_partial_fraction_sum():
    out = rf_arith(P("1", "1-z"), P("1", "1+z"), "add")
    assert rf_eq(out, P("2", "1-z^2"))


def test_division_and_subtraction():
    f, g = P("z", "1+w"), P("w")
    assert rf_eq(rf_arith(rf_arith(f, g, "div"), g, "mul"), f)
    assert rf_arith(f, f, "sub").is_zero()


def test_equality_examples():
    assert rf_eq(P("z", "1+z*w"), P("z^2*w", "z*w + z^2*w^2"))
    assert not rf_eq(P("z"), P("w"))
    assert rf_eq(P("1-z^2*w^2", "1-z*w"), P("1+z*w"))


def test_partial_examples():
    assert rf_eq(rf_partial(P("z^2*w"), "z"), P("2*z*w"))
    assert rf_eq(rf_partial(P("1", "1+z*w"), "w"), P("-z", "1 + 2*z*w + z^2*w^2"))
    assert rf_partial(P("7/3"), "z").is_zero()


def test_bar_examples():
    assert rf_eq(rf_bar(P("z")), P("w"))
    assert rf_eq(rf_bar(P("i*z*w^2")), P("-i*z^2*w"))
    f = P("(1+2*i)*z", "1+z*w")
    z0 = 0.3 + 0.4j
    assert abs(rf_eval(rf_bar(f), z0, np.conj(z0)) - np.conj(rf_eval(f, z0, np.conj(z0)))) < 1e-14


def test_eval_examples():
    assert rf_eval(P("z", "1+z*w"), 1, 1) == pytest.approx(0.5)
    with pytest.raises(PoleAtPoint):
        rf_eval(P("1", "1-z*w"), 1, 1)


def test_eval_vectorised():
    f = P("z^2+3*w", "2+z*w")
    zs = np.array([0.1 + 0.2j, -1.0, 2j])
    ref = [(z * z + 3 * np.conj(z)) / (2 + z * np.conj(z)) for z in zs]
    assert np.allclose(f.eval(zs, np.conj(zs)), ref)


def test_golden_entries_finite_unitary(golden_S):
    z0 = 1 + 1j
    S = golden_S.eval(z0, np.conj(z0))
    assert np.all(np.isfinite(S))
    assert np.linalg.norm(S @ S.conj().T - np.eye(3)) < 1e-12


def test_matrix_examples():
    I2 = MatRF.identity(2)
    assert mat_inverse(I2).is_identity()
    A = MatRF([[P("z"), P("1")], [P("0"), P("w")]])
    assert mat_adjoint(mat_adjoint(A)).equals(A)
    U = MatRF([[P("1"), P("z")], [P("0"), P("1")]])
    assert mat_inverse(U).equals(MatRF([[P("1"), P("-z")], [P("0"), P("1")]]))
    assert mat_ops(U, mat_inverse(U), "mul").is_identity()
    assert mat_ops(U, U, "add").equals(U * 2)


def test_singular_inverse_raises():
    A = MatRF([[P("z"), P("z")], [P("w"), P("w")]])
    with pytest.raises(SingularMatrixFunction):
        mat_inverse(A)


def test_parse_errors():
    with pytest.raises(ParseError):
        BiPoly.parse("z^^2")
    with pytest.raises(ParseError):
        BiPoly.parse("q + 1")


def test_gauss_rational_arithmetic():
    a, b = GaussRational("1/2", "3"), GaussRational(2, "-1/3")
    assert (a * b) / b == a
    assert (a + b) - b == a
    assert a.conj().conj() == a
    assert GaussRational.from_json(a.to_json()) == a


def test_json_round_trip_and_encoding():
    f = P("(1/2+i)*z^2*w - 3", "1+z*w")
    data = json.loads(json.dumps(f.to_json()))
    assert set(data) == {"num", "den"}
    term = data["num"][0]
    assert set(term) == {"i", "j", "c"} and set(term["c"]) == {"re", "im"}
    assert RatFunc.from_json(data).equals(f)
    M = MatRF([[f, P("z")], [P("w"), P("1")]])
    assert MatRF.from_json(json.loads(json.dumps(M.to_json()))).equals(M)


def test_dilation_and_inversion():
    f = P("z", "1+z*w")
    assert f.dilate(2).equals(P("2*z", "1+4*z*w"))
    assert f.invert_vars().equals(P("w", "1+z*w"))


# -- randomized properties ---------------------------------------------------

small = st.integers(-3, 3)
coeff = st.builds(GaussRational, small, small)
monos = st.lists(st.tuples(st.integers(0, 2), st.integers(0, 2), coeff), max_size=4)


def _poly(terms):
    p = BiPoly.zero()
    for i, j, c in terms:
        p = p + BiPoly.monomial(i, j, c)
    return p


polys = monos.map(_poly)
nonzero_polys = polys.filter(lambda p: not p.is_zero())
ratfuncs = st.builds(RatFunc, polys, nonzero_polys)


@settings(max_examples=40, deadline=None)
@given(ratfuncs, ratfuncs, ratfuncs)
def test_field_axioms(a, b, c):
    assert rf_eq((a + b) + c, a + (b + c))
    assert rf_eq((a * b) * c, a * (b * c))
    assert rf_eq(a * (b + c), a * b + a * c)
    assert rf_eq(a + b, b + a)
    assert rf_eq(a * b, b * a)
    if not a.is_zero():
        assert rf_eq(a * (1 / a), RatFunc(1))


@settings(max_examples=40, deadline=None)
@given(ratfuncs)
def test_mixed_partials_commute(f):
    assert rf_eq(f.partial("z").partial("w"), f.partial("w").partial("z"))


@settings(max_examples=40, deadline=None)
@given(ratfuncs, ratfuncs)
def test_bar_is_involutive_ring_map(a, b):
    assert rf_eq(rf_bar(rf_bar(a)), a)
    assert rf_eq(rf_bar(a * b), rf_bar(a) * rf_bar(b))
    assert rf_eq(rf_bar(a + b), rf_bar(a) + rf_bar(b))


@settings(max_examples=40, deadline=None)
@given(ratfuncs)
def test_bar_commutes_with_eval(f):
    z0 = 0.37 - 0.81j
    try:
        v = rf_eval(f, z0, np.conj(z0))
    except PoleAtPoint:
        return
    assert abs(rf_eval(rf_bar(f), z0, np.conj(z0)) - np.conj(v)) <= 1e-9 * max(1.0, abs(v))


entries = st.integers(-4, 4)
mono_entries = st.tuples(entries, st.sampled_from(["1", "z", "w", "z*w"]))


@settings(max_examples=25, deadline=None)
@given(st.sampled_from([2, 3]), st.data())
def test_inverse_times_matrix_is_identity(n, data):
    rows = [[P(f"{c}*{m}") for c, m in (data.draw(mono_entries) for _ in range(n))] for _ in range(n)]
    A = MatRF(rows)
    if A.det().is_zero():
        return
    assert (mat_inverse(A) @ A).is_identity()
