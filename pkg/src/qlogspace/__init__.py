"""Block encodings, contraction powering and unital-channel simulation at desk scale."""
from .block_encoding import (
    BlockEncoding,
    block_encoding_circuit,
    qpe_circuit,
    unitary_implementation,
    verify_block_encoding,
)
from .channels import (
    ChannelProgram,
    ChannelStep,
    apply_channel,
    block_matrix,
    exact_output_distribution,
    natural_rep,
    output_distribution,
    simulate_unital,
)
from .circuit import Circuit, FourierOp, GateOp, RegisterLayout, StateVector, TwoLevelOp, circuit_unitary, invert, run
from .exceptions import GapViolation, QLogspaceError, ValidationError
from .learning import (
    SampleSource,
    TruncationParams,
    distinguish,
    estimate_entry,
    estimated_contraction,
    sample_count_for,
    shift_truncate,
    singleton_distinguish,
)
from .linalg import (
    frobenius_norm,
    herm_eig,
    hermitian_dilation,
    kron,
    matrix_power_oracle,
    spectral_norm,
    unitary_dilation,
    v_a_matrix,
    vectorize,
)
from .powering import (
    NoisyProbOracle,
    PoweringInstance,
    amplified_prob,
    bilinear_value,
    extract_value,
    general_power,
    powering_circuit,
    powering_prob,
    spectral_norm_estimate,
)
from .synthesis import Permutation, Transposition, decompose, perm_circuit, prep_circuit, prep_coefficients, tau

__version__ = "0.1.0"
