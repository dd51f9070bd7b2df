import numpy as np
import pytest

from unitonkit.errors import NonUnitaryLoop, SingularMatrixFunction, ZeroVector
from unitonkit.exactalg import GaussRational, MatRF, RatFunc
from unitonkit.looplab import LoopMat, loop_eval_lambda, loop_mul
from unitonkit.unitons import (
    Connection,
    based,
    bogomolny_fields,
    bogomolny_residual,
    connection_from_map,
    extended_check,
    flatness_residual,
    harmonic_residual,
    one_uniton_from_holo,
    smoothness_at_infinity,
    uniton_number_bound,
)


def P(num, den="1"):
    return RatFunc.parse(num, den)


@pytest.fixture(scope="module")
def reflection_product():
    S1, _ = one_uniton_from_holo(["1", "z"])
    S2, _ = one_uniton_from_holo(["1", "2*z"])
    return S1 @ S2


def _const_unitary():
    h = GaussRational(0, 1)
    return MatRF([[RatFunc(0), RatFunc(h)], [RatFunc(1), RatFunc(0)]])


# -- connection --------------------------------------------------------------


def test_constant_map_has_zero_connection():
    A = connection_from_map(_const_unitary())
    assert A.a_z.is_zero() and A.a_zbar.is_zero()


def test_one_uniton_connection_at_origin(uniton_1z):
    S, _ = uniton_1z
    A = connection_from_map(S)
    assert A.a_z.specialize(0, 0).equals(MatRF([[P("0"), P("0")], [P("-1"), P("0")]]))
    assert A.is_antihermitian()


def test_golden_connection_antihermitian(golden_S):
    assert connection_from_map(golden_S).is_antihermitian()


def test_singular_map_raises():
    with pytest.raises(SingularMatrixFunction):
        connection_from_map(MatRF([[P("z"), P("z")], [P("1"), P("1")]]))


# -- residuals ---------------------------------------------------------------


def test_harmonic_examples(uniton_1z, reflection_product):
    assert harmonic_residual(_const_unitary()).exact_zero
    assert harmonic_residual(uniton_1z[0]).exact_zero
    rep = harmonic_residual(reflection_product)
    assert not rep.exact_zero and rep.max_sample_norm > 1e-3 and not rep.passed


def test_one_uniton_u3_harmonic():
    S, E = one_uniton_from_holo(["1", "z", "z^2"])
    assert harmonic_residual(S).exact_zero
    assert extended_check(E).exact_zero


def test_flatness_examples(reflection_product):
    zero = MatRF.zeros(2)
    assert flatness_residual(Connection(zero, zero)).exact_zero
    bad = Connection(MatRF([[P("0"), P("w")], [P("0"), P("0")]]), zero)
    rep = flatness_residual(bad)
    assert not rep.exact_zero
    assert rep.max_sample_norm == pytest.approx(1.0)
    # pure gauge, even for a non-harmonic map
    assert flatness_residual(connection_from_map(reflection_product)).exact_zero


def test_flatness_pure_gauge_non_unitary():
    S = MatRF([[P("1"), P("z^2*w")], [P("w"), P("2+z")]])
    assert flatness_residual(connection_from_map(S)).exact_zero


def test_extended_examples(uniton_1z, golden_E):
    assert extended_check(LoopMat.identity(2)).exact_zero
    assert extended_check(uniton_1z[1]).exact_zero
    assert extended_check(golden_E).exact_zero


def test_extended_rejects_unbased_loop(uniton_1z):
    _, E = uniton_1z
    shifted = loop_mul(E, LoopMat.constant(MatRF.scalar(2, GaussRational(0, 1))))
    rep = extended_check(shifted)
    assert not rep.exact_zero and "E(-1)" in rep.detail


def test_extended_implies_harmonic(uniton_1z, golden_E):
    for E in (uniton_1z[1], golden_E):
        assert extended_check(E).exact_zero
        assert harmonic_residual(loop_eval_lambda(E, 1)).exact_zero


def test_bogomolny_examples(uniton_1z, reflection_product, golden_S):
    zero = MatRF.zeros(2)
    assert bogomolny_residual(bogomolny_fields(Connection(zero, zero))).exact_zero
    assert bogomolny_residual(bogomolny_fields(connection_from_map(uniton_1z[0]))).exact_zero
    assert not bogomolny_residual(bogomolny_fields(connection_from_map(reflection_product))).exact_zero
    assert bogomolny_residual(bogomolny_fields(connection_from_map(golden_S))).exact_zero


def test_bogomolny_iff_harmonic_and_flat(uniton_1z, reflection_product):
    S3, _ = one_uniton_from_holo(["1", "z", "z^2"])
    for S in (uniton_1z[0], S3, reflection_product):
        A = connection_from_map(S)
        both = harmonic_residual(S).exact_zero and flatness_residual(A).exact_zero
        assert bogomolny_residual(bogomolny_fields(A)).exact_zero == both


def test_bogomolny_gauge_normalisation(uniton_1z):
    B = bogomolny_fields(connection_from_map(uniton_1z[0]))
    i = GaussRational(0, 1)
    assert B.a_t.equals(B.a_y * (-i))
    assert B.phi.equals(B.a_x * i)


# -- smoothness --------------------------------------------------------------


def test_smoothness(uniton_1z, golden_S):
    assert smoothness_at_infinity(_const_unitary()).passed
    assert smoothness_at_infinity(uniton_1z[0]).passed
    assert smoothness_at_infinity(golden_S).passed
    rep = smoothness_at_infinity(MatRF([[P("1"), P("z")], [P("0"), P("1")]]))
    assert not rep.passed and rep.method == "sampled_growth"


# -- uniton number -----------------------------------------------------------


def test_uniton_number(uniton_1z, golden_E):
    sup, verdict = uniton_number_bound(golden_E)
    assert verdict == "at_least_two" and sup.as_tuple() == (-2, 2)
    sup, verdict = uniton_number_bound(uniton_1z[1])
    assert verdict == "consistent_with_one_uniton" and sup.within(-1, 1)
    sup, verdict = uniton_number_bound(LoopMat.identity(3))
    assert verdict == "consistent_with_one_uniton" and sup.as_tuple() == (0, 0)


def test_uniton_number_invariant_under_constant_unitary(uniton_1z, golden_E):
    i = GaussRational(0, 1)
    C2 = LoopMat.constant(MatRF([[RatFunc(1), RatFunc(0)], [RatFunc(0), RatFunc(i)]]))
    C3 = LoopMat.constant(MatRF([[RatFunc(0), RatFunc(1), RatFunc(0)],
                                 [RatFunc(i), RatFunc(0), RatFunc(0)],
                                 [RatFunc(0), RatFunc(0), RatFunc(-1)]]))
    for E, C in ((uniton_1z[1], C2), (golden_E, C3)):
        a = uniton_number_bound(E)
        b = uniton_number_bound(loop_mul(E, C))
        assert a[1] == b[1] and a[0].as_tuple() == b[0].as_tuple()


def test_uniton_number_requires_unitary_loop():
    E = LoopMat(1, {0: MatRF([[P("1")]]), 1: MatRF([[P("z")]])})
    with pytest.raises(NonUnitaryLoop):
        uniton_number_bound(E)


# -- generators --------------------------------------------------------------


def test_one_uniton_constant_projection():
    S, E = one_uniton_from_holo(["1", "0"])
    assert S.equals(MatRF([[P("1"), P("0")], [P("0"), P("-1")]]))
    assert E.equals(LoopMat(2, {0: MatRF([[P("1"), P("0")], [P("0"), P("0")]]),
                                1: MatRF([[P("0"), P("0")], [P("0"), P("-1")]])}))


def test_one_uniton_projection_formula(uniton_1z):
    _, E = uniton_1z
    pi = MatRF([[P("1", "1+z*w"), P("w", "1+z*w")], [P("z", "1+z*w"), P("z*w", "1+z*w")]])
    assert E.coeff(0).equals(pi)


def test_one_uniton_zero_vector():
    with pytest.raises(ZeroVector):
        one_uniton_from_holo(["0", "0"])


def test_based_map_is_identity_at_infinity(uniton_1z):
    S, _ = uniton_1z
    B = based(S)
    far = 1e7 * np.exp(0.3j)
    assert np.allclose(B.eval(far, np.conj(far)), np.eye(2), atol=1e-6)
    assert harmonic_residual(B).exact_zero
