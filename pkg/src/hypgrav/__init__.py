"""DG spectral element solver for self-gravitating gas dynamics.

The compressible Euler equations and a first-order hyperbolic reformulation
of the Poisson equation for the gravitational potential are discretized with
the same nodal DG method on a shared adaptive quadtree mesh and two-way
coupled through their source terms.
"""

__version__ = "0.1.0"
