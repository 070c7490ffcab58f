import numpy as np
import pytest

from drgo.evaluation import (
    VarianceDiagnosticError,
    noisy_weight_path,
    synthetic_variance_diagnostic,
    triplet_leverage,
    weighted_bpr_variance,
)
from drgo.graph import generate_synthetic


@pytest.fixture(scope="module")
def noisy_benchmark():
    return generate_synthetic(n_users=300, n_items=200, mean_degree=10, noise_ratio=0.2, seed=3)


def test_triplet_leverage():
    features = np.array([[1.0, 2.0], [0.0, 3.0]])
    gaps = np.array([0.5, -2.0])

    assert np.allclose(triplet_leverage(features, gaps), [1.25, 36.0])
    assert np.allclose(triplet_leverage(np.array([2.0, 1.0]), gaps), [1.0, 4.0])
    with pytest.raises(VarianceDiagnosticError):
        triplet_leverage(np.ones(3), gaps)


def test_weighted_bpr_variance_formula():
    w_c, w_o = np.array([0.3, 0.3]), np.array([0.4])
    a_c, a_o = np.array([1.0, 2.0]), np.array([4.0])

    value = weighted_bpr_variance(w_c, w_o, a_c, a_o, clean_variance=0.1, noisy_variance=0.9)

    numerator = (0.09 * 1.0 + 0.09 * 2.0) * 0.1 + 0.16 * 4.0 * 0.9
    denominator = (0.3 + 0.6 + 1.6) ** 2
    assert value == pytest.approx(numerator / denominator)


def test_weighted_bpr_variance_errors():
    with pytest.raises(VarianceDiagnosticError):
        weighted_bpr_variance(np.ones(2), np.ones(1), np.ones(3), np.ones(1), 0.1, 0.2)
    with pytest.raises(VarianceDiagnosticError):
        weighted_bpr_variance(np.zeros(2), np.zeros(1), np.ones(2), np.ones(1), 0.1, 0.2)


def test_moving_mass_to_noisy_triplets_raises_variance():
    # GIVEN equal leverage everywhere and noisier labels on the noisy triplets
    clean, noisy = np.ones(80), np.ones(20)

    # WHEN the noisy share grows from its uniform value
    rows = noisy_weight_path(clean, noisy, 0.05, 0.5, shares=[0.2, 0.3, 0.4, 0.6])

    # THEN the variance grows with it
    variances = [row["variance"] for row in rows]
    assert [row["noisy_share"] for row in rows] == [0.2, 0.3, 0.4, 0.6]
    assert all(np.diff(variances) > 0)
    assert variances[0] == pytest.approx((0.8**2 / 80 * 0.05 + 0.2**2 / 20 * 0.5))


@pytest.mark.parametrize("shares", [[1.0], [-0.1]])
def test_noisy_weight_path_rejects_shares(shares):
    with pytest.raises(VarianceDiagnosticError):
        noisy_weight_path(np.ones(2), np.ones(2), 0.1, 0.2, shares)


def test_noisy_weight_path_needs_both_partitions():
    with pytest.raises(VarianceDiagnosticError):
        noisy_weight_path(np.ones(2), np.empty(0), 0.1, 0.2, [0.1])


def test_synthetic_variance_diagnostic(noisy_benchmark):
    rows = synthetic_variance_diagnostic(noisy_benchmark, n_triplets=2048, points=6, max_share=0.6, seed=1)

    shares = [row["noisy_share"] for row in rows]
    assert len(rows) == 6
    assert shares[-1] == pytest.approx(0.6)
    assert all(np.diff(shares) > 0)
    assert all(np.isfinite(row["variance"]) and row["variance"] > 0 for row in rows)


def test_synthetic_variance_diagnostic_is_deterministic(noisy_benchmark):
    first = synthetic_variance_diagnostic(noisy_benchmark, n_triplets=512, seed=2)

    assert first == synthetic_variance_diagnostic(noisy_benchmark, n_triplets=512, seed=2)


def test_synthetic_variance_diagnostic_needs_noise():
    clean = generate_synthetic(n_users=60, n_items=40, mean_degree=5, seed=0)

    with pytest.raises(VarianceDiagnosticError):
        synthetic_variance_diagnostic(clean)


def test_synthetic_variance_diagnostic_needs_room_to_move(noisy_benchmark):
    with pytest.raises(VarianceDiagnosticError):
        synthetic_variance_diagnostic(noisy_benchmark, n_triplets=512, max_share=0.01)
