"""rivkit: refined instrumental-variable system identification.

Discrete- and continuous-time refined IV estimators (SRIV, RIV, SRIVC, RIVC)
plus the adapted DT variants (ASRIV, ARIV) whose CT equivalents keep a
prescribed relative degree, the exact ZOH / inverse-ZOH sampling maps linking
the two domains, and a reproducible Monte Carlo benchmark harness.
"""

from rivkit._backend import BACKEND
from rivkit.errors import RivkitError
from rivkit.estimators import (
    EstimationReport,
    EstimatorConfig,
    EstimatorKind,
    KINDS,
    arma_pem,
    check_equivalence,
    iv_step,
    least_squares_init,
    run_estimator,
    stabilize_theta,
)
from rivkit.filtering import (
    RegressionData,
    SampledSignal,
    build_adapted_instrument,
    build_adapted_regressor,
    build_filtered_output,
    build_instrument,
    build_regressor,
    ct_filter_sampled,
    dt_filter,
)
from rivkit.lti import (
    CtModel,
    DtModel,
    NoiseModel,
    StateSpace,
    is_stable,
    poly_roots,
    relative_degree,
    tf_eval,
    to_state_space,
)
from rivkit.sampling import (
    AdaptedDtModel,
    ZohDomainCertificate,
    adapted_forward,
    adapted_inverse,
    check_domain,
    instrument_polys,
    inverse_zoh,
    numerator_basis_polys,
    relative_degree_from_step,
    zoh_discretize,
)
from rivkit.simulation import (
    ExperimentSpec,
    MseTable,
    arma_noise,
    monte_carlo,
    multisine_zoh,
    rao_garnier_noise,
    rao_garnier_spec,
    rao_garnier_system,
    simulate_system,
    snr,
)

__version__ = "0.1.0"
