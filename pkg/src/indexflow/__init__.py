"""Index theory for even-order linear Hamiltonian systems.

Morse indices, spectral flows and Maslov-type indices of index forms with
self-adjoint boundary conditions, computed along independent routes so
that the identities relating them can be checked as exact integer
equalities.
"""
from .errors import (AccuracyError, ArgumentError, ConsistencyError, DiscretizationError,
                     IndexFlowError, IntegrationAccuracyError, ParseError, PreconditionError,
                     RegularityError, SingularCoefficientError, TrackingError, ValidationError)
from .polynomials import MatPoly
from .structures import (BoundaryData, SubspaceFrame, SymplecticForm, SymplecticSplitting,
                         annihilator_K, annihilator_R2mb, compatible_K, graph_frame,
                         intersection_dim, is_lagrangian, stable_subspace, structure_matrices)
from .hamiltonian import (CoefficientFamily, ODEOptions, SymplecticPath, base_path,
                          base_path_closed_form, frame_change, base_gram_matrix,
                          integrate_fundamental)
from .spectralflow import (HermitianPath, InertiaTriple, block_path_sf, inertia, morse_index,
                           relative_morse_index, restriction_index, sf_crossings,
                           sf_endpoints, sf_hermitian, sf_unitary)
from .maslov import (LagrangianPairPath, check_triangular, crossing_form, frame_change_shift,
                     maslov_pair, maslov_type_index, maslov_via_crossings, triangular_index)
from .galerkin import (Discretization, IndexResult, LevelSequence, SplineSpace, assemble,
                       constrained_basis, discrete_morse_index, form_spectral_flow,
                       kernel_dimension)
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
