"""hamsys: analysis of symmetric first-order systems J f' + B f = lambda H f.

The package validates the structural hypotheses of such systems (skew-adjoint
invertible J, B - B* = J', Hermitian PSD H, possibly singular), computes
fundamental solutions with their H-Gram, tests definiteness, reduces systems
to a constant-J / zero-B form, classifies square-integrable solutions into
formal deficiency indices, and certifies essential self-adjointness through
propagation-speed integral criteria.
"""

__version__ = "0.1.0"

from .analysis import (
    DEFAULT_TRUNCATIONS,
    DeficiencyReport,
    DefinitenessReport,
    LambdaInvarianceReport,
    SolutionClassification,
    classify_directions,
    classify_solutions,
    deficiency_indices,
    definiteness,
    lambda_invariance,
)
from .certify import (
    CONVERGES,
    DIVERGES,
    UNKNOWN,
    Certificate,
    CutoffSequence,
    SpeedFunction,
    certify_selfadjoint,
    check_gradient_bound,
    cutoff_sequence,
    divergence_test,
    verify_energy_bound,
)
from .dsl import (
    CallableMatrixField,
    DslSyntaxError,
    EvaluationSingularity,
    ExpressionField,
    Interval,
    MatrixField,
    constant_field,
    parse_matrix_function,
    parse_scalar,
    parse_vector_function,
)
from .linalg import (
    hermitian_psd_check,
    min_singular_value,
    operator_norm,
    singular_values,
)
from .propagate import (
    FundamentalSolution,
    PropagationError,
    gram_matrix,
    h_norm_sq,
    propagate,
)
from .system import (
    GaugeTransform,
    SquareSystemSpec,
    SymmetricSystem,
    ValidationReport,
    canonical_reduce,
    default_validation_grid,
    gauge_apply,
    sl_embed,
    sl_square_spec,
    square_system,
    validate,
)
from .sysfile import SystemFile, parse_complex, parse_system_file, render_system_file
