"""Phase-space filtered open boundaries for semilinear Schrodinger equations."""

__version__ = "0.1.0"
