import logging
from typing import Dict, List, Sequence

import numpy as np

from ..graph import SyntheticBenchmark
from ..models import sample_triplets
from .exceptions import VarianceDiagnosticError

logger = logging.getLogger(__name__)

PATH_POINTS = 10


def triplet_leverage(features: np.ndarray, score_gaps: np.ndarray) -> np.ndarray:
    """Squared norm of x_{u,i+} * (r_{u,i+} - r_{u,i-}) per triplet

    `features` holds one row per triplet, or one scalar per triplet.
    """
    features = np.asarray(features, dtype=np.float64)
    gaps = np.asarray(score_gaps, dtype=np.float64).reshape(-1)
    if features.ndim == 1:
        features = features[:, None]
    if len(features) != len(gaps):
        raise VarianceDiagnosticError(f"{len(features)} feature rows but {len(gaps)} score gaps")
    return np.sum((features * gaps[:, None]) ** 2, axis=1)


def weighted_bpr_variance(
    clean_weights: np.ndarray,
    noisy_weights: np.ndarray,
    clean_leverage: np.ndarray,
    noisy_leverage: np.ndarray,
    clean_variance: float,
    noisy_variance: float,
) -> float:
    """Approximate variance of the weighted BPR estimator over a clean and a noisy triplet partition

        sum_c w^2 a sigma_c^2 + sum_o w^2 a sigma_o^2
        ---------------------------------------------
                 (sum_c w a + sum_o w a)^2

    where a is the per-triplet leverage from `triplet_leverage`.

    Raises
    ------
    VarianceDiagnosticError
        When the shapes disagree or the denominator is zero
    """
    w_c = np.asarray(clean_weights, dtype=np.float64).reshape(-1)
    w_o = np.asarray(noisy_weights, dtype=np.float64).reshape(-1)
    a_c = np.asarray(clean_leverage, dtype=np.float64).reshape(-1)
    a_o = np.asarray(noisy_leverage, dtype=np.float64).reshape(-1)
    if w_c.shape != a_c.shape or w_o.shape != a_o.shape:
        raise VarianceDiagnosticError("every triplet needs one weight and one leverage value")

    numerator = np.sum(w_c**2 * a_c) * clean_variance + np.sum(w_o**2 * a_o) * noisy_variance
    denominator = (np.sum(w_c * a_c) + np.sum(w_o * a_o)) ** 2
    if denominator <= 0:
        raise VarianceDiagnosticError("weighted leverage sums to zero, the variance is undefined")
    return float(numerator / denominator)


def noisy_weight_path(
    clean_leverage: np.ndarray,
    noisy_leverage: np.ndarray,
    clean_variance: float,
    noisy_variance: float,
    shares: Sequence[float],
) -> List[Dict[str, float]]:
    """Diagnostic along a path of total noisy-triplet mass

    For every share s, noisy triplets split s uniformly and clean triplets split 1 - s.
    """
    n_clean, n_noisy = len(clean_leverage), len(noisy_leverage)
    if not n_clean or not n_noisy:
        raise VarianceDiagnosticError("the weight path needs clean and noisy triplets")
    rows = []
    for share in shares:
        if not 0.0 <= share < 1.0:
            raise VarianceDiagnosticError(f"noisy share must lie in [0, 1), got {share}")
        rows.append(
            {
                "noisy_share": float(share),
                "variance": weighted_bpr_variance(
                    np.full(n_clean, (1.0 - share) / n_clean),
                    np.full(n_noisy, share / n_noisy),
                    clean_leverage,
                    noisy_leverage,
                    clean_variance,
                    noisy_variance,
                ),
            }
        )
    return rows


def synthetic_variance_diagnostic(
    benchmark: SyntheticBenchmark,
    n_triplets: int = 4096,
    points: int = PATH_POINTS,
    max_share: float = 0.5,
    seed: int = 0,
) -> List[Dict[str, float]]:
    """Weight path on triplets sampled from a synthetic benchmark with labelled noise edges

    The path starts at uniform triplet weights (noisy share = fraction of noisy triplets) and moves
    noisy mass up to `max_share`. The ground-truth preference stands in for the scores, every positive
    has unit features, and the label variances are those recorded by the benchmark.

    Raises
    ------
    VarianceDiagnosticError
        When the benchmark has no noise edges, a sample holds no clean or no noisy triplet, or noisy
        triplets already hold `max_share` under uniform weights
    """
    if not len(benchmark.noise_edges):
        raise VarianceDiagnosticError("the benchmark carries no noise edges")
    rng = np.random.default_rng(seed)
    triplets = sample_triplets(benchmark.graph, n_triplets, rng)
    preference = benchmark.preference
    gaps = preference[triplets.users, triplets.positives] - preference[triplets.users, triplets.negatives]
    leverage = triplet_leverage(np.ones(len(triplets)), gaps)
    noisy = benchmark.is_noise(triplets.users, triplets.positives)
    uniform_share = noisy.mean()
    if not 0 < uniform_share < max_share:
        raise VarianceDiagnosticError(f"uniform noisy share {uniform_share:.3f} leaves no path up to {max_share}")
    shares = np.linspace(uniform_share, max_share, points)
    logger.debug(f"Variance diagnostic over {len(triplets)} triplets, {int(noisy.sum())} noisy")
    return noisy_weight_path(
        leverage[~noisy], leverage[noisy], benchmark.clean_variance, benchmark.noise_variance, shares
    )
