"""Detecting smooth graph signals: Laplacian spectra, smooth graph filters,
weighted chi-square false-alarm laws and likelihood-ratio detectors."""

from .exceptions import *  # noqa: F401,F403
from .graph import (
    SignalBatch,
    SpectralGraph,
    WeightedGraph,
    build_spectral_graph,
    eigenvalue_groups,
    gft,
    graph_from_edges,
    inverse_gft,
    path_graph,
    total_variation,
    total_variation_edges,
)
from .filters import (
    Claim1Result,
    SpectralFilter,
    absorb_mean,
    allpass,
    apply_filter,
    average_crossing_index,
    claim1_check,
    expected_tv,
    filter_from_config,
    filter_matrix,
    lpf_order_ratio,
    make_box1_filter,
    polynomial,
    pseudo_inverse_square,
    quadform_polynomial,
    smoothness_ratio,
    support,
    tabulated,
)
from .quadform import (
    QuadFormLaw,
    glrt_tail_prob,
    law_from_filters,
    lrt_tail_prob,
    lrt_threshold,
    quadform_cdf,
    quadform_sf,
    quadform_weights,
    semi_tail_prob,
    semi_threshold,
)
from .detectors import (
    DetectionReport,
    MLFilterEstimate,
    decide,
    lpf_eta_hat,
    lpf_eta_hat_detect,
    lrt_box1,
    lrt_detect,
    lrt_statistic,
    make_detector,
    ml_filter_estimate,
    naive_tv_statistic,
    sample_covariance,
    semi_detect,
    semi_r_hat,
)
from .simulate import (
    ExperimentSpec,
    RocCurve,
    alpha_for_ratio,
    generate_batch,
    pd_sweep,
    rbf_graph,
    roc_curve,
    roc_curves,
    sample_coords,
    scaling_experiment,
)

__version__ = "0.1.0"
