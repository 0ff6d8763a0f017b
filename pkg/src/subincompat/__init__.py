"""Measurement incompatibility in subspaces.

Library and CLI for joint-measurability analysis of POVM assemblages:
depolarising incompatibility robustness, truncation to subspaces and the
incompressible / fully-compressible / partly-compressible classification,
coexistence checking, steering assemblages with local-hidden-state models,
and the bound-entanglement construction of incompressible incompatibility.
All semidefinite programs run on the bundled dense interior-point solver.
"""

__version__ = "0.1.0"
