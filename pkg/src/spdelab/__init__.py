"""Finite-difference and spectral-Galerkin simulation of stochastic Burgers-type SPDEs.

The package computes discretisation-induced correction terms for rough
(space-time white) noise and drives numerical experiments that compare
competing schemes against their predicted corrected limits.
"""

from spdelab.grid import Field, PeriodicGrid, SpectralCoeffs, l2_norm

__version__ = "0.1.0"

__all__ = ["Field", "PeriodicGrid", "SpectralCoeffs", "l2_norm", "__version__"]
