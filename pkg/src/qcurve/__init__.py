"""Numerical toolkit for prescribing fractional Q-curvature on S^n with n = 2 sigma + 2."""

__version__ = "0.1.0"
