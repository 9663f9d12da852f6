"""cmi-lab: information diagnostics for learning algorithms.

The package measures how recognizable an algorithm's training data is from
its output -- its selection information against a ghost-sample array --
exactly or by seeded Monte Carlo, and verifies the generalization bounds
that this quantity implies.
"""

__version__ = "0.1.0"

from .info_core import (  # noqa: F401
    FiniteDistribution,
    JointPmf,
    Nats,
    conditional_mutual_information,
    dv_gap,
    entropy,
    event_probability_bound,
    jsd_tv,
    kl,
    kl_gaussian,
    mutual_information,
)
from .algkernel import (  # noqa: F401
    AlgorithmKernel,
    CmiEstimate,
    Selector,
    Supersample,
    SupersampleSampler,
    blahut_arimoto,
    cmi_distribution_free,
    cmi_distributional,
    cmi_exact_fixed,
    compose_adaptive,
    compose_pair,
    ecmi_fixed,
    postprocess,
    select,
    ucmi_fixed,
)
from .learners import (  # noqa: F401
    HypothesisClass,
    ParityHypothesis,
    ThresholdHypothesis,
    compression_wrap,
    consistent_erm,
    parity_learn,
    pathological_erm,
    threshold_learn,
)
from .stability_mech import (  # noqa: F401
    DpParams,
    StabilityCertificate,
    TvParams,
    ecmi_gaussian_bound,
    randomized_response,
    tv_lottery,
    ucmi_dp_check,
)
from .bounds import (  # noqa: F401
    BoundReport,
    GapEstimate,
    LossSpec,
    Population,
    bound_agnostic,
    bound_auroc,
    bound_nonlinear,
    bound_nonlinear_expectation,
    bound_normalized,
    bound_realizable,
    check_theorem,
    delta_preset,
    empirical_auroc,
    estimate_gap,
)
from .harness import SuiteReport, emit, run_suite  # noqa: F401
