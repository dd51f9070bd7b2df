import json

import numpy as np
import pytest

from unitonkit.errors import (
    IllConditioned,
    NonTrivialIndices,
    NonzeroIndicesWhenForbidden,
    RankDeficient,
    ValidationFailed,
)
from unitonkit.exactalg import RatFunc
from unitonkit.goldens import golden_transition, jump_p0, transition_frame
from unitonkit.looplab import loop_eval_lambda
from unitonkit.rhfactor import (
    CircleSamples,
    FactorConfig,
    birkhoff_factorize,
    circle_sample,
    fit_rational,
    index_analysis,
    partial_indices,
    rational_reconstruct,
    ward_reconstruct,
    winding_number,
)

I2, I3 = np.eye(2), np.eye(3)


def samples(fn, n, m=7):
    return CircleSamples.from_callable(fn, n, m)


def nilpotent_pair(z0):
    w0 = np.conj(z0)
    N = np.array([[0, z0, 1 + w0], [0, 0, z0 * w0], [0, 0, 0]], dtype=complex)
    Np = np.array([[0, 0, 0], [w0, 0, 0], [2 - z0, 0.5j * z0, 0]], dtype=complex)
    return N, Np


def nilpotent_T(z0):
    N, Np = nilpotent_pair(z0)
    return lambda lam: (I3 + Np / lam) @ np.linalg.inv(I3 + lam * N)


# -- sampling ----------------------------------------------------------------


def test_circle_sample_examples(golden_E):
    T = circle_sample(lambda lam: I2, 6, n=2)
    assert T.count == 64 and np.allclose(T.values, I2)
    D = samples(lambda lam: np.diag([lam, 1 / lam]), 2, 6)
    assert np.allclose(D.values[:, 1, 1], np.conj(D.points))
    G = circle_sample(golden_E, 6, point=0.5)
    dev = G.values @ np.conj(np.swapaxes(G.values, -1, -2)) - I3
    assert np.abs(dev).max() < 1e-12


def test_circle_samples_json_round_trip():
    T = samples(lambda lam: np.array([[lam, 1j], [0, 2 / lam]]), 2, 4)
    data = json.loads(T.dumps())
    assert set(data) == {"n", "m", "values"}
    assert len(data["values"]) == 16
    back = CircleSamples.from_json(data)
    assert np.array_equal(back.values, T.values)


def test_winding_number():
    assert winding_number(samples(lambda lam: np.diag([lam ** 3, 1 / lam]), 2)) == 2
    assert winding_number(samples(lambda lam: np.array([[2 + lam]]), 1)) == 0


# -- factorization -----------------------------------------------------------


def test_identity_factorization():
    res = birkhoff_factorize(samples(lambda lam: I3, 3))
    assert list(res.indices) == [0, 0, 0]
    assert np.allclose(res.H(0.3), I3) and np.allclose(res.Hhat(2.0), I3)


def test_scalar_closed_form():
    res = birkhoff_factorize(samples(lambda lam: np.array([[2 + lam]]), 1), FactorConfig(modes=32))
    assert list(res.indices) == [0]
    h = np.array([c[0, 0] for c in res.h_coeffs])
    k = np.arange(len(h))
    assert np.abs(h - (-1.0) ** k / 2.0 ** (k + 1)).max() <= 1e-10
    assert abs(res.hhat_coeffs[0][0, 0] - 1) <= 1e-10
    # best possible residual with 33 coefficients is 2**-33 (ledgered)
    assert res.residual < 2.0 ** -32


def test_scalar_residual_converges():
    T = samples(lambda lam: np.array([[2 + lam]]), 1, 8)
    assert birkhoff_factorize(T, FactorConfig(modes=64)).residual <= 1e-14


def test_matrix_hand_factorization():
    T = samples(lambda lam: np.array([[lam, 1], [0, 1 / lam]]), 2)
    res = birkhoff_factorize(T, FactorConfig(modes=32))
    assert list(res.indices) == [0, 0] and res.residual <= 1e-10
    assert np.allclose(res.h_coeffs[0], [[0, -1], [1, 0]], atol=1e-10)
    assert np.allclose(res.h_coeffs[1], [[0, 0], [0, 1]], atol=1e-10)
    # truncated series: H is evaluated in the closed disc, Hhat outside it
    for lam in (1.5, 2j, -3.0, np.exp(0.7j)):
        assert np.allclose(res.Hhat(lam), [[1, 0], [1 / lam, 1]], atol=1e-10)
    for lam in (0.5, -0.3j, np.exp(0.7j)):
        assert np.allclose(res.H(lam), [[0, -1], [1, lam]], atol=1e-10)
    lam = np.exp(2.1j)
    assert np.allclose(np.array([[lam, 1], [0, 1 / lam]]) @ res.H(lam), res.Hhat(lam), atol=1e-9)


def test_residual_halving_on_analytic_example():
    Y = np.array([[0.5, 0.2], [0.1, -0.4j]])
    N2 = np.array([[0, 1], [0, 0]])
    T = samples(lambda lam: (I2 + N2.T / lam) @ (I2 + lam * Y), 2, 8)
    res = [birkhoff_factorize(T, FactorConfig(modes=m)).residual for m in (8, 16, 32)]
    assert res[1] <= res[0] / 2 and res[2] <= res[1] / 2


def test_nilpotent_example_at_roundoff():
    T = samples(nilpotent_T(0.4 - 0.2j), 3)
    for modes in (8, 16, 32):
        assert birkhoff_factorize(T, FactorConfig(modes=modes)).residual <= 1e-12


def test_require_trivial():
    T = samples(lambda lam: np.diag([lam, 1 / lam]), 2)
    with pytest.raises(NonzeroIndicesWhenForbidden) as info:
        birkhoff_factorize(T, FactorConfig(require_trivial=True))
    assert list(info.value.indices) == [-1, 1]


def test_ill_conditioned():
    T = samples(lambda lam: np.diag([1.0, 1e-14]), 2)
    with pytest.raises(IllConditioned):
        birkhoff_factorize(T, FactorConfig(cond_max=1e8))


def test_result_json():
    res = birkhoff_factorize(samples(lambda lam: np.array([[lam, 1], [0, 1 / lam]]), 2))
    d = json.loads(json.dumps(res.to_json()))
    assert d["indices"] == [0, 0] and d["residual"] < 1e-10


# -- partial indices ---------------------------------------------------------


@pytest.mark.parametrize(
    "fn,n,expected",
    [
        (lambda lam: np.diag([lam, 1 / lam]), 2, [-1, 1]),
        (lambda lam: np.diag([lam ** 2, 1, lam ** -2]), 3, [-2, 0, 2]),
        (lambda lam: np.array(jump_p0(0, lam), dtype=complex), 3, [-2, 0, 2]),
        (lambda lam: np.array([[2, 1j], [0.5, 3]]), 2, [0, 0]),
        (lambda lam: np.array([[lam ** 2, 1], [0, 1 / lam]]), 2, [0, 1]),
    ],
)
def test_partial_index_examples(fn, n, expected):
    assert partial_indices(samples(fn, n)) == expected


def test_index_analysis_margin():
    an = index_analysis(samples(lambda lam: np.diag([lam, 1 / lam]), 2))
    assert list(an.indices) == [-1, 1] and an.winding == 0
    assert an.margin > 3


def test_index_sum_equals_winding_on_random_loops(rng):
    for trial in range(20):
        n = int(rng.integers(2, 4))
        ks = rng.integers(-2, 3, size=n)
        off = rng.normal(size=(3, n, n)) + 1j * rng.normal(size=(3, n, n))

        def T(lam, ks=ks, off=off):
            M = np.diag(lam ** ks.astype(float)).astype(complex)
            for p, C in zip((-1, 0, 1), off):
                M = M + np.triu(C, 1) * lam ** p
            return M

        S = samples(T, n, 7)
        assert sum(partial_indices(S)) == winding_number(S) == int(ks.sum())


# -- Ward reconstruction -----------------------------------------------------


def test_ward_identity():
    W = ward_reconstruct(samples(lambda lam: I3, 3))
    assert np.allclose(W.S, I3)


def test_ward_nilpotent_oracle():
    for z0 in (0.4 - 0.2j, 1.1 + 0.7j):
        N, Np = nilpotent_pair(z0)
        W = ward_reconstruct(samples(nilpotent_T(z0), 3), FactorConfig(modes=32))
        assert np.abs(W.S - (I3 + N) @ np.linalg.inv(I3 - Np)).max() <= 1e-8


def test_ward_rejects_nontrivial_indices():
    with pytest.raises(NonTrivialIndices):
        ward_reconstruct(samples(lambda lam: np.diag([lam, 1 / lam]), 2))


@pytest.mark.parametrize("z0", [0, 0.3 + 0.1j, -0.5 + 0.7j])
def test_ward_matches_golden(golden_S, golden_E, z0):
    T = golden_transition(z0, m=7)
    W = ward_reconstruct(T, FactorConfig(modes=32))
    assert np.abs(W.S - golden_S.eval(z0, np.conj(z0))).max() <= 1e-6
    lams = np.exp(2j * np.pi * np.arange(16) / 16)
    E = np.array([W.E(lam, frame=transition_frame(z0)) for lam in lams])
    ref = np.array([loop_eval_lambda(golden_E, lam).eval(z0, np.conj(z0)) for lam in lams])
    assert np.abs(E - ref).max() <= 1e-6
    dev = E @ np.conj(np.swapaxes(E, -1, -2)) - I3
    assert np.abs(dev).max() <= 1e-8


def test_ward_normalisation_invariance_and_covariance():
    T = golden_transition(0.3 + 0.1j, m=7)
    C = np.array([[1, 2, 0], [0, 1, 1j], [0.5, 0, 1]])
    base = ward_reconstruct(T).S
    assert np.abs(ward_reconstruct(T, at_infinity=C).S - base).max() <= 1e-8
    moved = ward_reconstruct(T.right_multiply(C)).S
    assert np.abs(moved - np.linalg.solve(C, base)).max() <= 1e-8


# -- rational reconstruction -------------------------------------------------


def _grid(k):
    g = np.linspace(-1.5, 1.5, k)
    X, Y = np.meshgrid(g, g)
    return (X + 1j * Y).ravel()


def test_reconstruct_constant():
    pts = _grid(6)
    assert rational_reconstruct(pts, np.full(pts.shape, 3.0), (0, 0), (0, 0)).equals(RatFunc(3))


def test_reconstruct_simple_rational():
    pts = _grid(6)
    fit = fit_rational(pts, pts / (1 + pts * np.conj(pts)), (1, 0), (1, 1))
    assert fit.func.equals(RatFunc.parse("z", "1+z*w"))
    assert fit.heldout_error <= 1e-9 and fit.unsnapped == []


def test_reconstruct_golden_entry(golden_S):
    pts = _grid(12)
    entry = golden_S[0, 0]
    vals = entry.eval(pts, np.conj(pts))
    fit = fit_rational(pts, vals, (4, 4), (4, 4))
    assert fit.func.equals(entry) and fit.heldout_error <= 1e-9


def test_reconstruct_errors():
    pts = _grid(6)
    vals = pts / (1 + pts * np.conj(pts))
    with pytest.raises(RankDeficient):
        fit_rational(pts, vals, (2, 2), (2, 2))
    with pytest.raises(RankDeficient):
        fit_rational(pts[:3], vals[:3], (1, 0), (1, 1))
    with pytest.raises(ValidationFailed):
        fit_rational(pts, np.exp(pts.real), (1, 1), (1, 1))
