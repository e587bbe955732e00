"""Hybrid quantum-classical dynamics with dynamically realized projective measurement."""

from .bloch import (
    BlochTrajectory,
    RotatingApparatus,
    bloch_rhs,
    crosscheck_generic,
    probability_rhs,
    simulate_noninertial,
)
from .couplings import (
    CouplingTensor,
    VFunction,
    add,
    coupling_from_V,
    lindblad_coupling,
    simple_projective_coupling,
    unitary_coupling,
    validate_positivity,
    validate_V,
)
from .dynamics import Trajectory, induced_rhs_checks, integrate, poulin_rhs
from .linalg import (
    OperatorBasis,
    SpectralDecomposition,
    expand,
    hermitian_eigendecomposition,
    hs_inner,
    is_psd,
    lindblad_basis,
    reconstruct,
)
from .state import (
    HybridState,
    bloch_vector,
    collapsed_state,
    induced_probabilities,
    induced_quantum_state,
    purity,
    validate,
)

__version__ = "0.1.0"
