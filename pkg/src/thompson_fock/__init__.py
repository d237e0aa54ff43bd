"""Thompson group F acting on L^2[0,1]: exact Koopman windows, restricted
unitary diagnostics, truncated Fock-space implementers and the lifting
obstruction pair."""
from __future__ import annotations

__version__ = "0.1.0"

from .dyadic import Dyadic, ExactScalar, get_tau, isclose, set_tau, tau_context
from .thompson import (
    DPLMap,
    GroupWord,
    commutator,
    evaluate_word,
    generator,
    identity,
    level,
    level_bound,
    mil,
    named_element,
    verify_relations,
)
from .haar import (
    KoopmanColumns,
    ModeIndex,
    RotationM,
    SparseOperator,
    StepFunction,
    cell_window,
    expansion,
    koopman_apply,
    koopman_window,
    mode_function,
)
from .restricted import (
    block_decomposition,
    fredholm_index,
    hs_norm_commutator,
    phase_b,
    segal_distance,
    unitary_log,
)
from .fock import (
    CarOperator,
    FockBasisLabel,
    FockVector,
    Implementer,
    apply_car,
    commutator_phase,
    implement,
    solve_vacuum,
)
from .lifting import PhasePair, lifting_report, psi, psi_scan
from .dgr import DGRElement, boundary, check_d_squared

__all__ = [name for name in dir() if not name.startswith("_")]
