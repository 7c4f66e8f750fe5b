"""Born-rule generative models: simulation, MMD training, and bound calculators."""

from .errors import CapabilityError
from .sim import (
    DiscreteDistribution,
    EigenResult,
    Hamiltonian,
    PureState,
    SampleSet,
    apply_gate,
    born_distribution,
    eigendecompose,
    fidelity,
    kl_divergence,
    sample,
)
from .circuits import (
    Fixed,
    GateOp,
    Input,
    ParamCircuit,
    Trainable,
    bind,
    build_hardware_efficient,
    build_phl_qgan,
    build_qaoa,
    build_qcbm_ansatz,
    build_style_qgan,
    generator_output,
)
from .kernels import (
    KernelSpec,
    kernel_eval,
    mmd2_exact,
    mmd2_u,
    quantum_mmd_diag,
    quantum_mmd_pure,
)
from .training import (
    TrainConfig,
    TrainTrace,
    qcbm_gradient,
    qcbm_loss,
    qgan_gradient,
    train_qcbm,
    train_qgan_algorithm1,
)
from .bounds import (
    BoundInput,
    BoundReport,
    bound_hea,
    bound_qaoa,
    bound_qcbm,
    bound_qgan,
    empirical_gap,
    log_covering_circuit,
    log_covering_encoder,
)
from .targets import (
    Gaussian3DTarget,
    make_discrete_gaussian,
    make_ghz,
    make_xxz,
    sample_gaussian3d,
    xxz_ground_state,
)
from .rng import substream

__version__ = "0.1.0"
