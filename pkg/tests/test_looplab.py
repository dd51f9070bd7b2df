import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from unitonkit.errors import DimensionMismatch, EvalAtZeroWithNegativePowers
from unitonkit.exactalg import GaussRational, MatRF, RatFunc
from unitonkit.looplab import (
    LoopMat,
    LoopSupport,
    loop_eval_lambda,
    loop_lambda_derivative,
    loop_mul,
    loop_partial,
    loop_sample,
    loop_star_dual,
    loop_support,
)
from unitonkit.unitons import one_uniton_from_holo


def P(num, den="1"):
    return RatFunc.parse(num, den)


def test_identity_is_neutral(uniton_1z):
    _, E = uniton_1z
    I = LoopMat.identity(2)
    assert loop_mul(E, I).equals(E)
    assert loop_mul(I, E).equals(E)


def test_projection_loop_times_dual_is_identity(uniton_1z):
    # (pi - lam pi_perp)(pi - lam^-1 pi_perp) = 1 for an exact projection
    _, E = uniton_1z
    pi = E.coeff(0)
    perp = MatRF.identity(2) - pi
    assert (pi @ pi).equals(pi)
    F = LoopMat(2, {0: pi, -1: perp * -1})
    assert loop_mul(E, F).is_identity()
    assert loop_star_dual(E).equals(F)


def test_eval_lambda(golden_E, golden_S):
    assert loop_eval_lambda(golden_E, -1).is_identity()
    assert loop_eval_lambda(LoopMat.identity(3), GaussRational(2, 5)).is_identity()
    assert (golden_S @ golden_S.adjoint()).is_identity()


def test_eval_at_zero_with_negative_powers(golden_E):
    with pytest.raises(EvalAtZeroWithNegativePowers):
        loop_eval_lambda(golden_E, 0)
    with pytest.raises(EvalAtZeroWithNegativePowers):
        loop_sample(golden_E, 0.0, 0.5)


def test_float_lambda_matches_exact(golden_E):
    z0 = 0.4 - 0.3j
    exact = loop_eval_lambda(golden_E, GaussRational("1/2", "1/3")).eval(z0, np.conj(z0))
    assert np.allclose(loop_sample(golden_E, 0.5 + 1j / 3, z0), exact, atol=1e-13)


def test_star_dual_identity_and_golden(golden_E):
    I = LoopMat.identity(3)
    assert loop_star_dual(I).equals(I)
    assert loop_mul(golden_E, loop_star_dual(golden_E)).is_identity()


def test_support(golden_E):
    assert loop_support(golden_E).as_tuple() == (-2, 2)
    assert loop_support(LoopMat.identity(2)).as_tuple() == (0, 0)
    assert LoopSupport(-1, 1).within(-2, 2)
    assert not LoopSupport(-2, 1).within(-1, 1)


def test_constant_loop_derivatives_vanish():
    C = LoopMat.constant(MatRF([[P("2"), P("i")], [P("0"), P("1")]]))
    assert loop_partial(C, "z").is_zero()
    assert loop_partial(C, "w").is_zero()
    assert loop_lambda_derivative(C).is_zero()


def test_lambda_derivative():
    E = LoopMat(1, {-1: MatRF([[P("z")]]), 2: MatRF([[P("1")]])})
    D = loop_lambda_derivative(E)
    assert D.equals(LoopMat(1, {-2: MatRF([[P("-z")]]), 1: MatRF([[P("2")]])}))


def test_golden_sample_unitary(golden_E):
    S = loop_sample(golden_E, np.exp(1j * np.pi / 3), 0.7 - 0.2j)
    assert np.linalg.norm(S @ S.conj().T - np.eye(3)) <= 1e-10


def test_sample_broadcasts(golden_E):
    lam = np.exp(2j * np.pi * np.arange(4) / 4)[:, None]
    z = np.array([0.0, 0.3 + 0.1j, -1.2j])[None, :]
    out = loop_sample(golden_E, lam, z)
    assert out.shape == (4, 3, 3, 3)
    assert np.allclose(out[2, 1], loop_sample(golden_E, lam[2, 0], z[0, 1]))


def test_unitary_loop_samples_on_circle(golden_E, rng):
    lam = np.exp(2j * np.pi * rng.random(64))
    z = rng.normal(size=64) + 1j * rng.normal(size=64)
    vals = loop_sample(golden_E, lam, z)
    dev = np.linalg.norm(vals @ np.conj(np.swapaxes(vals, -1, -2)) - np.eye(3), axis=(-2, -1))
    assert dev.max() <= 1e-10


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        loop_mul(LoopMat.identity(2), LoopMat.identity(3))


def test_json_round_trip(golden_E):
    data = json.loads(json.dumps(golden_E.to_json()))
    assert set(data) == {"n", "terms"}
    assert {t["k"] for t in data["terms"]} == {-2, -1, 0, 1, 2}
    assert LoopMat.from_json(data).equals(golden_E)


def test_zero_pruning(uniton_1z):
    _, E = uniton_1z
    assert (E - E).is_zero()
    assert (E - E).coeffs == {}


# -- randomized exact properties ---------------------------------------------

ents = st.sampled_from(["0", "1", "z", "w", "-2*z*w", "i", "1/2*w^2"])


@st.composite
def loops(draw, n=2):
    lo = draw(st.integers(-2, 1))
    hi = draw(st.integers(lo, 2))
    coeffs = {}
    for k in range(lo, hi + 1):
        coeffs[k] = MatRF([[P(draw(ents)) for _ in range(n)] for _ in range(n)])
    return LoopMat(n, coeffs)


@settings(max_examples=25, deadline=None)
@given(loops(), loops(), loops())
def test_mul_associative(a, b, c):
    assert loop_mul(loop_mul(a, b), c).equals(loop_mul(a, loop_mul(b, c)))


@settings(max_examples=25, deadline=None)
@given(loops(), loops())
def test_star_dual_anti_homomorphism_and_involution(a, b):
    assert loop_star_dual(loop_mul(a, b)).equals(loop_mul(loop_star_dual(b), loop_star_dual(a)))
    assert loop_star_dual(loop_star_dual(a)).equals(a)


@settings(max_examples=25, deadline=None)
@given(loops(), loops())
def test_support_of_product(a, b):
    sa, sb, sp = loop_support(a), loop_support(b), loop_support(loop_mul(a, b))
    if a.is_zero() or b.is_zero() or sp.min_deg > sp.max_deg:
        return
    assert sa.min_deg + sb.min_deg <= sp.min_deg
    assert sp.max_deg <= sa.max_deg + sb.max_deg


def test_one_uniton_u3_loop_is_unitary():
    _, E = one_uniton_from_holo(["1", "z", "z^2"])
    assert loop_mul(E, loop_star_dual(E)).is_identity()
