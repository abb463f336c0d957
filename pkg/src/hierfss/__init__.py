"""Finite-size scaling of the hierarchical O(n) |phi|^4 model above the upper critical dimension.

Modules
-------
lattice    hierarchical group, random walks, Laplacians and covariance decomposition
profiles   universal profiles f_n, radial moments and moment ratios
pertflow   perturbative RG flow, critical points, effective points and renormalised masses
exactrg    Monte Carlo block-spin RG and final-scale zero-mode observables
saw        self-avoiding walk on the complete graph and the weakly self-avoiding walk
cli        command-line driver and acceptance suite
"""

__version__ = "0.1.0"

from .errors import DomainError, NumericalFailure  # noqa: F401
