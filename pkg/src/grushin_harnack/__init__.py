"""Numerical laboratory for Harnack inequalities of Grushin-type operators.

Modules
-------
quasimetric  sampling estimators for quasi-metric measure spaces
geometry     d̃, boxes, the kernels ρ and σ, the sublevel sets G and H
engine       derivation of the structural constants
barriers     explicit ring barrier and its subsolution check
solver       finite-difference Dirichlet solver for the Grushin operator
harness      double ball, critical density, power decay and Harnack checks
"""

__version__ = "0.1.0"
