"""Multi-secret summary-statistic privacy: release mechanisms, privacy
metrics, Wasserstein-2 distortion and privacy-distortion lower bounds."""

from ._backend import BACKEND
from .bounds import (
    GammaValue,
    composition_bound,
    lower_bound_group,
    lower_bound_inter,
    lower_bound_lp,
    lower_bound_union,
    random_offset_constant,
    surrogate_bound_line,
)
from .distortion import (
    lemma_c2_lower_bound,
    mechanism_distortion,
    w2_empirical_exact,
    w2_empirical_sliced,
    w2_gaussian,
    w2_gaussian_2d,
    w2_gaussian_diag,
    w2_gaussian_general,
)
from .experiments import TradeoffRecord, emit, generate_synthetic, read_records, run_sweep
from .mechanisms import (
    ReleaseOutcome,
    release,
    release_alg1,
    release_alg2,
    release_alg3,
    release_ap_gaussian,
    release_dataset,
    release_distp_laplace,
    release_dp_histogram,
)
from .model import (
    MIDPOINT,
    RANDOM_OFFSET,
    Dataset,
    Gaussian2DParams,
    GaussianDiagParams,
    GaussianGeneralParams,
    GroupPartition,
    LpSpec,
    MechanismConfig,
    ModelError,
    PriorSpec,
    SecretSpec,
    SecretTarget,
    estimate_params,
    secret_values,
)
from .privacy import (
    PrivacyReport,
    analytic_privacy_alg1,
    grid_attackers,
    monte_carlo_privacy,
    multi_shot_privacy,
    surrogate_privacy,
)

__version__ = "0.1.0"
