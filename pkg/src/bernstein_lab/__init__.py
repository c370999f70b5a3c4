"""Numerical experiments around entire minimal graphs of polynomial growth.

Modules
-------
foliation, perturbed_leaf
    The minimal leaf ODE, its phase-plane trapping region and a perturbed leaf.
barriers, mse_solver
    Super/subsolutions built from level sets of the leaves and a finite
    difference solver for the symmetry-reduced minimal surface equation.
cone_stability, lagrangian, mss2d, lawson_osserman
    Stability of minimal cones, special Lagrangian rotation, explicit
    two-dimensional minimal graphs and a cone over the Hopf map.
report_cli
    The ``bernstein-lab`` command line front end.
"""

__version__ = "0.1.0"
