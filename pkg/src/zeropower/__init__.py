"""Exact invariant tests for error correlation in Gaussian regression,
zero-power trap diagnostics, and trap-avoiding test constructions."""

__version__ = "0.1.0"

from .exceptions import *  # noqa: F401,F403
from .model import (  # noqa: F401
    ComplementBasis,
    CovarianceModel,
    DesignMatrix,
    ModelPoint,
    WeightsMatrix,
    ar1_model,
    build_lattice_weights,
    complement_basis,
    limit_vector,
    sar_model,
    sigma_at,
    sigma_dot_zero,
    weights_matrix,
)
from .qform import MonteCarlo, prob_positive, qform_law, ratio_exceed_prob  # noqa: F401
from .testkit import (  # noqa: F401
    PowerCurve,
    TestSpec,
    b_cliff_ord,
    b_ee,
    b_lbi,
    b_poi,
    critical_value,
    power,
    power_curve,
    power_envelope,
    statistic_value,
)
from .diagnostics import design_scan, diagnose, exceptional_form_check, genericity_poly  # noqa: F401
from .enhance import (  # noqa: F401
    approximation_profile,
    artificial_regressor_test,
    artreg_limiting_power,
    enhanced_critical,
    enhanced_power,
    lambda_matrix,
)
