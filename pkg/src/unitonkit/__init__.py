"""Exact and numerical tools for unitons: harmonic maps from the sphere into U(N).

Modules
-------
exactalg
    Gaussian-rational polynomials and rational functions in (z, w = z-bar).
looplab
    Laurent polynomials in the loop parameter with exact matrix coefficients.
unitons
    Connection, residuals of the field equations, one-uniton generator.
energy
    Two-chart energy quadrature and the related integral identities.
rhfactor
    Birkhoff factorization, partial indices, Ward reconstruction.
goldens
    The explicit U(3) example and its frames.
cli
    Command-line entry point ``unitonkit``.
"""

__version__ = "0.1.0"
