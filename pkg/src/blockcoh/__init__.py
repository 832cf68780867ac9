"""Block-coherence measures, free-state optimization and radical-pair dynamics."""

from ._accel import NUMBA_ENABLED
from .analysis import (
    DISCurve,
    OrderingVerdict,
    counterexample_search,
    dis_curve,
    inequality_battery,
    ordering_check,
    pure_state_profiles,
)
from .blocks import (
    ProjectorSet,
    block_dephase,
    block_diagonal_unitary,
    is_block_incoherent,
    off_block,
    st_projectors,
)
from .dynamics import (
    SimulationConfig,
    TimeSeriesRecord,
    batch_yield_experiment,
    master_rhs,
    p_coh_eff,
    simulate,
    st_hamiltonian,
)
from .io import StateFile, fixture, load_state
from .linalg import (
    PureState,
    QuantumState,
    fidelity,
    frac_power,
    hermitian_eig,
    random_state,
    trace_norm,
    von_neumann_entropy,
)
from .measures import (
    MeasureParams,
    MeasureReport,
    c_alpha_1,
    c_alpha_z,
    c_geo,
    c_l1_tilde,
    c_max,
    c_rel_entropy,
    c_rob,
    c_rob_lower,
    c_trace,
    c_tsallis_N,
    c_tsallis_T,
    c_wy,
    convex_combination,
    convex_roof_ub,
    variance_op,
)
from .search import OptimizerBudget, maximize_over_free_states, minimize_over_free_states, warm_start

__version__ = "0.1.0"
