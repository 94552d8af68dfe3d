"""Numerics for positive solutions of (-Delta)^alpha u + u = h(u) on expanding planar domains.

The package discretizes the spectral fractional Laplacian on masked uniform
grids, solves the associated Nehari-manifold minimization problems, and probes
how solution multiplicity, barycenter localization, and Morse indices respond
to the domain's shape and scale.
"""

__version__ = "0.1.0"
