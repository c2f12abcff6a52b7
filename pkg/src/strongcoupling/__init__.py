"""Strong-coupling effective Hamiltonians for lattice fermion models.

The package conjugates a lattice Hamiltonian ``H = H0 + Q`` (classical
on-site part plus hopping) by ``exp(S1) exp(S2) ...`` so that the low
band of ``H0`` decouples to a given order in the hopping, and extracts
the resulting effective spin Hamiltonians in exact rational arithmetic.

Modules
-------
scalar, fock, operators
    Exact scalars, fermionic Fock sectors and sparse operators.
cluster, models
    Finite clusters and the one-band and three-band model families.
conjugation
    The order-by-order conjugation and per-support effective terms.
extract
    Spin-basis coefficients and reference tables.
ed
    Floating-point validation by exact diagonalization.
phase
    Ground-state phase diagrams and stability diagnostics.
cli
    Command-line entry point (``python -m strongcoupling``).
"""

__version__ = "0.1.0"
