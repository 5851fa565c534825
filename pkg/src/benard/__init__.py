"""Numerical laboratory for wall-bounded Boussinesq convection, its scaled
variant with vanishing diffusion, and the two-scale cell limit.

Subpackages and modules:

    grid, fields     grids, fields, discrete vector calculus
    poisson          pressure solves on box and torus
    solver           wall-bounded Boussinesq time stepper and sweeps
    cell             periodic cell problem in fast time
    homogenize       two-scale pairings and convergence reports
    meanfield        averaged buoyancy projection and mean field
    bounds           decay envelopes, barrier checks, absorbing constants
    config, snapshots, pipeline, cli   experiment plumbing
"""

__version__ = "0.1.0"
