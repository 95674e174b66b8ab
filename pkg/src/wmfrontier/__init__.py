"""Soft green-list watermarking toolkit.

Vocabulary partitioning and logit biasing, watermark-score detection with
max-F0.5 threshold calibration, permutation-averaged pairwise quality
judging, a desk-scale n-gram generator, a sweep harness over watermark
operating points, and trade-off curve fitting/transfer.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    CapacityError,
    ConfigError,
    DomainError,
    ProtocolError,
    TransportError,
    WmfrontierError,
)
from .wm_core import (  # noqa: F401
    GreenListRule,
    apply_bias,
    green_list,
    green_mask,
    green_membership,
    grouped_score,
    watermark_score,
)
from .toy_lm import NGramLM, SamplerConfig, generate, log_likelihood, logits, train  # noqa: F401
from .detection import DetectionReport, ScoredSample, best_threshold, confusion_at, f_beta  # noqa: F401
from .judge import (  # noqa: F401
    ComparisonRequest,
    JudgeBackend,
    QualityScore,
    corpus_quality,
    external_judge_client,
    likelihood_judge,
    pairwise_prob,
    perplexity_metric,
)
from .analysis import (  # noqa: F401
    Point2D,
    TanhCurve,
    TruncatedLinear,
    WhitenTransform,
    fit_tanh_curve,
    fit_truncated_linear,
    pearson,
    spearman,
    transfer_curve,
    whiten,
)
from .harness import (  # noqa: F401
    OperatingPoint,
    SweepConfig,
    SweepRow,
    length_stats,
    run_sweep,
    seed_consistency,
)
