"""Generalized FAMED checks, gluing geometry and Teichmueller TQFT asymptotics
for ordered ideal triangulations of knot complements."""

__version__ = "0.1.0"
