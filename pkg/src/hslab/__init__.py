"""Numerical laboratory for the Hunter-Saxton equation.

Direct scattering, the Plemelj function and its endpoint constants, the
parabolic-cylinder leading-order asymptotics, and an independent PDE
solver used to validate them.
"""

__version__ = "0.1.0"

__all__ = ["__version__"]
