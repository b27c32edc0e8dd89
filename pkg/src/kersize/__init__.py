"""Accuracy bounds and optimal set-valued decoders for finite inverse problems."""

from .average_case import (
    AverageReport, Posterior, kersize_average, optimal_decoder_average, average_report,
    posterior_distribution, weighted_geometric_median, weighted_mean,
)
from .decoder import SetValuedDecoder, decoder_from_dict
from .evaluation import (
    GapReport, RnspCertificate, check_rnsp_bound, evaluate_decoder, forward_model_sweep,
    make_baseline, rnsp_falsify,
)
from .io import SpecError, parse_problem_spec, problem_to_dict
from .measure import (
    DiscreteMeasure, Disintegration, PushforwardMeasure, disintegrate, err_a, ess_sup_discrete,
    pushforward, residual,
)
from .metrics import (
    MetricSpace, check_metric_axioms, complex_to_real, diameter, dist, dist_point_set,
    hausdorff_point_set, hausdorff_set_set,
)
from .problem import (
    ForwardModel, MeasurementTable, ModelClass, NoiseClass, Problem, build_measurement_table,
    feasible_set, forward_eval,
)
from .worst_case import (
    CandidatePolicy, ChebyshevResult, WorstCaseReport, chebyshev_center_candidates,
    chebyshev_center_euclidean, kersize_worst, minimum_enclosing_ball, optimal_decoder_worst,
    worst_case_error, worst_case_report,
)

__version__ = "0.1.0"
