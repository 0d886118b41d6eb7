"""Tensor-network toolkit: labeled tensors, MPS/MPO algorithms (DMRG, time
evolution, thermal states), and real-space renormalization for the 2D Ising
model, with brute-force oracles for validation.

Brute-force reference implementations live in ``tnkit.oracle`` and are kept
out of this namespace on purpose: they exist to check the tensor-network
results, so code paths should reach for them explicitly.
"""

__version__ = "0.1.0"

from .tensor import (
    DenseTensor,
    TruncationSpec,
    TruncationReport,
    contract,
    contract_network,
    svd_split,
    qr_split,
    trace,
    scale_axis,
)
from .models import (
    PAULI,
    SX,
    SY,
    SZ,
    ClassicalModelSpec,
    HamiltonianSpec,
    bond_terms,
    custom_nn,
    heisenberg_xxz,
    term_matrices,
    transverse_field_ising,
)
from .mps import (
    MatrixProductState,
    canonical_residual,
    canonicalize,
    compress,
    correlator,
    entanglement_entropy,
    expect_local,
    gauge_transform,
    inner,
    norm,
    product_state,
    random_mps,
    schmidt_spectrum,
    to_dense,
)
from .mpo import (
    FitTrace,
    MatrixProductOperator,
    apply_mpo_exact,
    apply_mpo_variational,
    build_mpo,
    expect_mpo,
    identity_mpo,
    mpo_dagger,
    mpo_multiply,
    mpo_to_dense,
)
from .dmrg import (
    DmrgConfig,
    DmrgTrace,
    excited_state,
    ground_state,
    lanczos_ground,
)
from .tebd import (
    DEFAULT_COOLING_SCHEDULE,
    EvolutionTrace,
    TebdConfig,
    TrotterGate,
    TrotterScheme,
    apply_gate,
    build_trotter,
    evolve,
    evolve_gates,
    imaginary_time_ground_state,
    infinite_temperature_state,
    lift_gate,
    lift_mpo,
    lift_site_operator,
    thermal_state,
)
from .trg import (
    CoarseGrainState,
    CoarseGrainTrace,
    coarse_grain,
    hotrg_step,
    trg_step,
)
from .checkpoint import CheckpointError, checkpoint_read, checkpoint_write
from .config import (
    ConfigError,
    RunConfig,
    RunSpec,
    load_config,
    parse_run_config,
    resolve_runs,
)

__all__ = [
    "__version__",
    "DenseTensor",
    "TruncationSpec",
    "TruncationReport",
    "contract",
    "contract_network",
    "svd_split",
    "qr_split",
    "trace",
    "scale_axis",
    "PAULI",
    "SX",
    "SY",
    "SZ",
    "ClassicalModelSpec",
    "HamiltonianSpec",
    "bond_terms",
    "custom_nn",
    "heisenberg_xxz",
    "term_matrices",
    "transverse_field_ising",
    "MatrixProductState",
    "canonical_residual",
    "canonicalize",
    "compress",
    "correlator",
    "entanglement_entropy",
    "expect_local",
    "gauge_transform",
    "inner",
    "norm",
    "product_state",
    "random_mps",
    "schmidt_spectrum",
    "to_dense",
    "FitTrace",
    "MatrixProductOperator",
    "apply_mpo_exact",
    "apply_mpo_variational",
    "build_mpo",
    "expect_mpo",
    "identity_mpo",
    "mpo_dagger",
    "mpo_multiply",
    "mpo_to_dense",
    "DmrgConfig",
    "DmrgTrace",
    "excited_state",
    "ground_state",
    "lanczos_ground",
    "DEFAULT_COOLING_SCHEDULE",
    "EvolutionTrace",
    "TebdConfig",
    "TrotterGate",
    "TrotterScheme",
    "apply_gate",
    "build_trotter",
    "evolve",
    "evolve_gates",
    "imaginary_time_ground_state",
    "infinite_temperature_state",
    "lift_gate",
    "lift_mpo",
    "lift_site_operator",
    "thermal_state",
    "CoarseGrainState",
    "CoarseGrainTrace",
    "coarse_grain",
    "hotrg_step",
    "trg_step",
    "CheckpointError",
    "checkpoint_read",
    "checkpoint_write",
    "ConfigError",
    "RunConfig",
    "RunSpec",
    "load_config",
    "parse_run_config",
    "resolve_runs",
]
