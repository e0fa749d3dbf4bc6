"""convecsym: spectral tools for 2-D Boussinesq convection and annular stability.

Bénard side (periodicity cell, stress-free walls): trigonometric bases,
invariant x-independent profiles with closed-form evolution, pseudo-spectral
time integration, energy diagnostics.

Annulus side: even-symmetric steady states between horizontal coaxial
cylinders, the energy-stability functional and its Euler-Lagrange
eigenproblems, and the planar-layer limit problem.
"""

from .basis import (GridSpec, ModeIndex, PRESSURE_LIKE, STREAM_TEMP,
                    SpectralField, VelocityField, d_dx, d_dz, divergence,
                    eval_basis, laplacian, solve_pressure_neumann, to_physical,
                    to_spectral, velocity_from_stream)
from .subspace import (SProfiles, SubspaceSplit, decompose, evolve_S_analytic,
                       mean_values, poiseuille_gradient_bound,
                       poiseuille_profile, project_F, project_S, reconstruct)
from .dynamics import (BlowUpError, Integrator, OBParams, OBState, SplitState,
                       Trajectory, nonlinear_term, recombine, simulate,
                       split_state, step, step_split)
from .energy import (BoundsReport, EnergyRecord, check_apriori_bounds,
                     energy_annulus, energy_benard, energy_identity_residual,
                     identity_residuals)
from .annulus import (AnnulusGeometry, AnnulusParams, BaseState,
                      PhysicalParams, PicardDivergenceError, PolarField,
                      PolarGrid, conduction_lift, geometry, nondimensionalize,
                      steady_solve, symmetrize, symmetry_residual)
from .stability import (EigenSolution, PerturbationPair, StabilityReport,
                        functional_F, initial_energy_slope, maximize_F,
                        most_dangerous_experiment, solve_eig, solve_eig0,
                        vertical_components)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
