"""Simulator for single-pair entanglement concentration under local operations."""

from .concentrate import ConcentrationResult, build_filter, concentrate, gamma_max, shift_flip_extract
from .errors import AnnihilationError, InvalidInputError, LQCCError, NumericalFailure, RankDeficiencyError
from .lqcc import LocalOperation, ProbeDilation, apply_pair, dilate, simulate_measurement, transfer_to_alice_side
from .states import (
    DensityMatrix,
    PureBipartiteState,
    SchmidtForm,
    Side,
    fully_entangled_fraction,
    is_maximally_entangled,
    marginal,
    max_entangled,
    random_pure_state,
    schmidt_decompose,
    state_from_schmidt,
    werner_state,
)
from .theorem import (
    check_bob_side_reduction,
    check_matrix_condition,
    marginals_equal,
    proposition_falsifier,
    purification_falsifier,
    shared_concentrator,
)

__version__ = "0.1.0"
