"""Fixed points, eigenvectors and convergence rates of order-preserving
homogeneous maps on the positive orthant."""

__version__ = "0.1.0"
