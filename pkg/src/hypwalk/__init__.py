"""Random walks on concrete hyperbolic groups, made computable."""

from .boundary import (
    BoundarySubshift,
    CylinderMeasure,
    HarmonicResult,
    build_subshift,
    busemann,
    entropy_boundary,
    escape_boundary,
    harmonic_measure,
    pressure_and_eigenmeasure,
    radon_nikodym_check,
    transfer_operator,
)
from .cones import (
    ConeVector,
    PositiveOperator,
    birkhoff_beta,
    liverani_gap,
    operator_diameter,
    tau,
    theta,
)
from .green import (
    GreenValue,
    Interval,
    green,
    green_hitting,
    green_identity,
    martin_kernel,
    martin_kernel_boundary,
    restricted_hitting,
    spectral_radius_estimate,
)
from .groups import (
    BallSizeError,
    FamilyMismatchError,
    FreeGroup,
    FreeProduct,
    Group,
    IntegerLine,
    SupportSet,
    make_group,
)
from .measures import (
    EstimateSeries,
    SparseDistribution,
    StepMeasure,
    convolve,
    entropy_escape_sequences,
    mc_entropy_difference,
    mc_escape_difference,
    sample_path,
    step_measure,
    uniform_measure,
)
from .obstacles import (
    Obstacle,
    ancona_verify,
    build_obstacle,
    chain_apply,
    check_chain_contraction,
    first_visit_matrix,
    holder_estimate_phi,
    stability_sweep,
)
from .regularity import (
    kink_detector,
    lipschitz_scan,
    neighborhood_stability,
    projective_distance,
)

__version__ = "0.1.0"
