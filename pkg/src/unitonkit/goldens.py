"""The explicit U(3) two-uniton: printed data, frames and transition matrices.

The printed extended solution is kept as a verbatim text transcription
(``PRINTED_BLOCKS``, with ``w`` for z-bar) and as checked-in JSON in
``data/golden_u3.json``.  The JSON is what :func:`golden_extended` loads;
the test suite checks it against the transcription.  The frame recipe in
:func:`golden_from_frames` is an independent regeneration path.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources

import numpy as np

from .errors import GoldenMismatch, SingularFrame
from .exactalg import BiPoly, MatRF, RatFunc
from .looplab import LoopMat, loop_eval_lambda, loop_mul

__all__ = [
    "PRINTED_BLOCKS",
    "GOLDEN_FACTORS",
    "GoldenU3",
    "TimeTranslation",
    "golden_extended",
    "golden_from_frames",
    "golden_transcribed",
    "golden_diff",
    "golden_u3",
    "golden_transition",
    "time_translation",
    "jump_p0",
    "jump_pinf",
    "frame_ginf",
    "frame_ginf_hat",
    "frame_real",
    "frame_real_loop",
    "transition_frame",
]

DENOMINATOR = ("1 + z^2*w^2 + w*z", "4*w*z + z^2*w^2 + 1")

# printed numerators, row by row; zero rows are "0"
PRINTED_BLOCKS = {
    -2: [
        ["0", "0", "0"],
        ["0", "0", "0"],
        ["4*w^3*z + z^2*w^4 + w^2", "4*w^2*z + z^2*w^3 + w", "z^2*w^2 + 4*w*z + 1"],
    ],
    -1: [
        ["0", "0", "0"],
        ["-z^3*w^4 - 4*z^2*w^3 - w^2*z", "-z^3*w^3 - 4*z^2*w^2 - w*z", "-z - 4*w*z^2 - z^3*w^2"],
        ["2*z^2*w^4 + 5*z*w^3 + 2*w^2", "-2*z^3*w^4 - z^2*w^3 + 2*z*w^2 + w", "-4*z^3*w^3 - 4*z^2*w^2 - z*w"],
    ],
    0: [
        ["z^4*w^4 + 4*z^3*w^3 + z^2*w^2", "z^4*w^3 + w*z^2 + 4*z^3*w^2", "4*w*z^3 + z^4*w^2 + z^2"],
        ["-z^3*w^4 - 2*z^2*w^3 + z*w^2 + 2*w", "z^4*w^4 - 2*z^2*w^2 + 1", "2*z^4*w^3 + z^3*w^2 - 2*z^2*w - z"],
        ["w^2 + z^2*w^4 + w^3*z", "-2*w^2*z - 2*w^4*z^3 - 2*z^2*w^3", "z^4*w^4 + w^3*z^3 + z^2*w^2"],
    ],
    1: [
        ["-z^3*w^3 - 4*z*w - 4*z^2*w^2", "-2*z - z^2*w + 2*z^3*w^2 + z^4*w^3", "2*z^4*w^2 + 5*z^3*w + 2*z^2"],
        ["2*z^2*w^3 + 2*w + 2*w^2*z", "-4*w^3*z^3 - 4*z^2*w^2 - 4*w*z", "2*w*z^2 + 2*w^3*z^4 + 2*z^3*w^2"],
        ["0", "0", "0"],
    ],
    2: [
        ["w*z + 1 + z^2*w^2", "-2*z^3*w^2 - 2*z - 2*w*z^2", "z^2 + w*z^3 + z^4*w^2"],
        ["0", "0", "0"],
        ["0", "0", "0"],
    ],
}

GOLDEN_FACTORS = tuple(BiPoly.parse(s) for s in DENOMINATOR)


def golden_transcribed() -> LoopMat:
    """Build the printed extended solution from the text transcription."""
    den = GOLDEN_FACTORS[0] * GOLDEN_FACTORS[1]
    coeffs = {}
    for k, rows in PRINTED_BLOCKS.items():
        coeffs[k] = MatRF([[RatFunc(BiPoly.parse(s), den) for s in row] for row in rows])
    return LoopMat(3, coeffs)


def golden_extended() -> LoopMat:
    """The printed extended solution, loaded from the checked-in JSON."""
    text = resources.files("unitonkit.data").joinpath("golden_u3.json").read_text()
    return LoopMat.from_json(json.loads(text))


# -- frames ------------------------------------------------------------------
# The matrices below are written with plain arithmetic so that they accept
# exact scalars, RatFunc entries or numpy complex arrays alike.


def jump_p0(lam, eta):
    """Transition matrix for the jumping line over lambda = 0."""
    return [[eta ** 2, 2 * lam * eta, lam ** 2],
            [0, 1, lam / eta],
            [0, 0, eta ** -2]]


def jump_pinf(lamh, etah):
    """The conjugate transition matrix over lambda = infinity (hat chart)."""
    return [[etah ** -2, 0, 0],
            [2 * lamh / etah, 1, 0],
            [lamh ** 2, lamh * etah, etah ** 2]]


def frame_ginf(lam, eta):
    """Infinity-section trivialisation near lambda = 0, eta finite."""
    return [[0, 0, lam ** 2],
            [0, -1, -lam * eta],
            [lam ** -2, 2 * eta / lam, eta ** 2]]


def frame_ginf_hat(lamh, etah):
    """Infinity-section trivialisation near lambda-hat = 0, eta-hat finite."""
    return [[etah ** 2, etah / lamh, lamh ** -2],
            [-2 * lamh * etah, -1, 0],
            [lamh ** 2, 0, 0]]


def frame_real(lam, z, w):
    """The real-section frame in (lambda, z, w)."""
    return [[z ** 2, -(2 * z + z ** 2 * w) * lam, lam ** 2],
            [-z / lam, 1 - z ** 2 * w ** 2, 2 * w * lam],
            [lam ** -2, (2 * z * w ** 2 + w) / lam, w ** 2]]


def frame_real_loop() -> LoopMat:
    """:func:`frame_real` as an exact LoopMat in lambda."""
    z, w = RatFunc(BiPoly.z()), RatFunc(BiPoly.w())
    zero = RatFunc(0)
    c = {k: [[zero] * 3 for _ in range(3)] for k in (-2, -1, 0, 1, 2)}
    c[0][0][0] = z * z
    c[1][0][1] = -(2 * z + z * z * w)
    c[2][0][2] = RatFunc(1)
    c[-1][1][0] = -z
    c[0][1][1] = 1 - z * z * w * w
    c[1][1][2] = 2 * w
    c[-2][2][0] = RatFunc(1)
    c[-1][2][1] = 2 * z * w * w + w
    c[0][2][2] = w * w
    return LoopMat(3, {k: MatRF(v) for k, v in c.items()})


def golden_from_frames() -> LoopMat:
    """``M(lambda) M(-1)^-1`` with ``M`` the real-section frame."""
    M = frame_real_loop()
    inv = loop_eval_lambda(M, -1).inverse()
    return loop_mul(M, LoopMat.constant(inv))


def golden_diff(printed: LoopMat, regenerated: LoopMat):
    """``(k, row, col, printed, regenerated)`` for every differing entry."""
    diffs = []
    keys = sorted(set(printed.coeffs) | set(regenerated.coeffs))
    for k in keys:
        a, b = printed.coeff(k), regenerated.coeff(k)
        for i in range(3):
            for j in range(3):
                if not a[i, j].equals(b[i, j]):
                    diffs.append((k, i, j, a[i, j], b[i, j]))
    return diffs


@dataclass(frozen=True)
class GoldenU3:
    extended: LoopMat
    frame_real: LoopMat
    diffs: tuple = ()

    jump_p0 = staticmethod(jump_p0)
    jump_pinf = staticmethod(jump_pinf)
    frame_ginf = staticmethod(frame_ginf)
    frame_ginf_hat = staticmethod(frame_ginf_hat)


def golden_u3(strict: bool = True) -> GoldenU3:
    """Printed data cross-checked against the frame regeneration.

    With ``strict`` a disagreement raises :class:`GoldenMismatch` carrying
    the differing entries; otherwise the regenerated loop is returned with
    the diff attached.
    """
    printed = golden_extended()
    regen = golden_from_frames()
    diffs = golden_diff(printed, regen)
    if diffs:
        if strict:
            raise GoldenMismatch(f"{len(diffs)} entries differ", diffs)
        return GoldenU3(regen, frame_real_loop(), tuple(diffs))
    return GoldenU3(printed, frame_real_loop(), ())


# -- transition data ---------------------------------------------------------


def _np(m):
    return np.array([[complex(x) if np.ndim(x) == 0 else x for x in row] for row in m], dtype=complex)


def _transition_matrices(lam, z0: complex, w0: complex):
    """Analytic-inside and analytic-outside frames at one lambda."""
    eta = z0 - lam ** 2 * w0
    etah = eta / lam ** 2
    M = _np(frame_real(lam, z0, w0))
    phi = np.linalg.solve(_np(frame_ginf(1.0, eta)), _np(frame_ginf(lam, eta)) @ M)
    phih = np.linalg.solve(_np(frame_ginf_hat(-1.0, etah)), _np(frame_ginf_hat(1 / lam, etah)) @ M)
    return phi, phih


def golden_transition(z0, w0=None, m: int = 6):
    """Samples of the transition ``Phi_hat Phi^-1`` on ``2**m`` roots of unity.

    ``Phi`` is the infinity-section frame near lambda = 0 applied to the
    real-section frame, then left-normalised by its own value at
    lambda = 1 so that ``Phi(1) = M(1)``.  ``Phi_hat`` is the hat-chart
    analogue normalised at lambda = -1.  Both normalisations are
    polynomial in lambda (resp. 1/lambda) on the real section, so the
    splitting and the Ward formula apply directly.
    """
    from .rhfactor import CircleSamples

    z0 = complex(z0)
    w0 = np.conj(z0) if w0 is None else complex(w0)
    N = 2 ** m
    lams = np.exp(2j * np.pi * np.arange(N) / N)
    vals = np.empty((N, 3, 3), dtype=complex)
    for idx, lam in enumerate(lams):
        phi, phih = _transition_matrices(lam, z0, w0)
        d = np.linalg.det(phi)
        if abs(d) < 1e-12 * max(1.0, np.linalg.norm(phi) ** 3):
            raise SingularFrame(f"frame singular at lambda = {lam}")
        vals[idx] = phih @ np.linalg.inv(phi)
    return CircleSamples(3, m, vals)


# -- time translation --------------------------------------------------------


@dataclass(frozen=True)
class TimeTranslation:
    t: Fraction
    matrix: tuple

    def __matmul__(self, other: "TimeTranslation") -> tuple:
        a, b = self.matrix, other.matrix
        return tuple(tuple(sum(a[i][k] * b[k][j] for k in range(3)) for j in range(3)) for i in range(3))


def time_translation(t) -> TimeTranslation:
    t = Fraction(t)
    mat = ((Fraction(1), Fraction(0), Fraction(0)),
           (-t, Fraction(1), Fraction(0)),
           (t * t, -2 * t, Fraction(1)))
    return TimeTranslation(t, mat)


def write_golden_json(path) -> None:
    """Regenerate the checked-in JSON from the transcription."""
    with open(path, "w") as fh:
        json.dump(golden_transcribed().to_json(), fh, indent=1, sort_keys=True)
        fh.write("\n")



def transition_frame(z0, w0=None):
    """``lam -> F0(1, eta)^-1 F0(lam, eta)`` on the real section.

    Passed as ``frame`` to :meth:`WardResult.E`, it turns the Ward factor
    ``H(lam) Hhat(-1)^-1`` back into the extended solution ``E(lam)``.
    """
    z0 = complex(z0)
    w0 = np.conj(z0) if w0 is None else complex(w0)

    def frame(lam):
        eta = z0 - lam ** 2 * w0
        return np.linalg.solve(_np(frame_ginf(1.0, eta)), _np(frame_ginf(lam, eta)))

    return frame
