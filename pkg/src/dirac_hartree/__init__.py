"""Spectral Galerkin solver for a Dirac-Hartree equation on a disk.

Layers, bottom up: ``specialfun`` (Bessel functions and root tables),
``basis`` (Dirac and Dirichlet eigenbases, grid transforms), ``operators``
(Hartree potential, action, residual, Jacobian), ``solver`` (Newton, flow,
branch ladder), ``verify`` (checks of the analytic properties) and ``cli``.
"""

__version__ = "0.1.0"
