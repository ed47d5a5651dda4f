"""Eigenvalues of the anisotropic Laplacian with a nonlocal term."""

__version__ = '0.1.0'
