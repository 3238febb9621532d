"""Infinitely many attractors at grazing-sliding bifurcations.

Piecewise-linear normal forms and their cycles, a verifier for the
conditions that produce infinitely many stable cycles, parameter synthesis,
an exactly solvable Filippov system realising the normal form, and
continuation of its periodic orbits.
"""

__version__ = "0.1.0"
