"""Spectral NLS solver with numerical checks of its conservation laws and
integral identities."""
from .grid import (BoundaryMassWarning, ComplexField, Grid, GridMismatchError, VectorField,
                   dealias, free_propagate, galilean, gradient, inner_product, laplacian,
                   make_grid, pairing, read_field, weight_x, write_field)
from .nonlinearity import PowerNonlinearity, check_assumptions, scaling_derivative, v_integral, w_integral
from .dynamics import (BlowUpError, NonContractionError, PicardNotConvergedError, SolverConfig,
                       Trajectory, duhamel_integral, evolve, picard_solve, strang_step)
from .observables import ObservableRecord, accumulate, observe, record_observables
from .verify import REGISTRY, IdentityReport, list_identities, run_check
from .oracle import ExactSolution, dense_propagate, fd_scaling_derivative

__version__ = "0.1.0"
