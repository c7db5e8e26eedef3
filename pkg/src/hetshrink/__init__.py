"""Spectral shrinkage with noise whitening for spiked models with
heteroscedastic noise: signal prediction, covariance estimation,
out-of-sample prediction, rank and noise-covariance estimation, and a
seeded Monte-Carlo experiment harness.
"""

from .errors import EstimationError, NumericError, WhiteningError
from .model_sim import (
    Dataset,
    NoiseModel,
    SpikedModelSpec,
    SplitSupport,
    UniformSphere,
    VarianceProfile,
    derive_seed,
    generate_dataset,
    make_noise_cov,
    rng_for,
    unwhiten,
    whiten,
)
from .spectral_params import (
    ComponentEstimate,
    ModelAggregates,
    bulk_edge,
    estimate_components,
    left_cosine,
    right_cosine,
    sigma_from_spike,
    spike_from_sigma,
)
from .sv_shrinkage import ShrinkageResult, shrink_predict
from .eig_shrinkage import FROBENIUS, NUCLEAR, OPERATOR, CovEstimate, LossFunction, cov_estimate, cov_loss
from .prediction import (
    OosPredictor,
    amse_oos,
    blp_oracle,
    fit_oos_predictor,
    load_predictor,
    oos_predict,
    save_predictor,
)
from .rank_and_noise import (
    diag_noise_var,
    estimate_rank_raw,
    estimate_rank_whitened,
    ingest,
    sample_noise_cov,
)
from .pca_metrics import empirical_pcs, phi, sin_theta, snr_operator
from .optshrink import optshrink_params, optshrink_predict
from .harness import ExperimentReport, run_experiment

__version__ = "0.1.0"
