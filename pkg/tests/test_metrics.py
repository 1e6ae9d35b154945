import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from headpose_eval.errors import EmptyInputError, InvalidArgumentError
from headpose_eval.metrics import (
    evaluate_metric,
    f_ge,
    g_chordal,
    g_dev_identity,
    g_euc,
    g_geodesic,
    g_geodesic_many,
    g_mae,
    g_mse,
    g_rmse,
    g_wrapped_yaw,
    geodesic_angles,
    mae_per_angle,
    wrapped_diff,
)
from headpose_eval.models import AxisAngle, EulerAnglesPYR, MetricId, RotationMatrix
from headpose_eval.so3 import euler_to_rotation, exp_map

from .factories import perturb


def _euler(pitch: float, yaw: float, roll: float) -> RotationMatrix:
    return euler_to_rotation(EulerAnglesPYR(pitch=pitch, yaw=yaw, roll=roll))


def test_wrapped_diff() -> None:
    """Test periodic angle differences."""
    assert wrapped_diff(359.0, 1.0) == pytest.approx(2.0)
    assert wrapped_diff(-179.0, 179.0) == pytest.approx(2.0)
    assert wrapped_diff(10.0, 10.0) == 0.0
    assert wrapped_diff(0.0, 180.0, norm_order=2) == 180.0
    diffs = wrapped_diff(np.array([350.0, 90.0]), np.array([10.0, -90.0]))
    assert np.allclose(diffs, [20.0, 180.0])
    with pytest.raises(InvalidArgumentError):
        wrapped_diff(1.0, 2.0, norm_order=3)
    with pytest.raises(InvalidArgumentError):
        wrapped_diff(float("nan"), 2.0)


def test_euler_metrics() -> None:
    """Test the Euler-vector losses on hand-computed values."""
    a = EulerAnglesPYR(pitch=10.0, yaw=350.0, roll=0.0)
    b = EulerAnglesPYR(pitch=13.0, yaw=-6.0, roll=4.0)
    assert g_mae(a, b) == pytest.approx(3.0 + 356.0 + 4.0)
    assert g_mse(a, b) == pytest.approx(9.0 + 356.0**2 + 16.0)
    assert g_rmse(a, b) == pytest.approx(np.sqrt(9.0 + 356.0**2 + 16.0))
    assert g_euc(a, b) == pytest.approx(3.0 + 4.0 + 4.0)
    assert g_wrapped_yaw(350.0, -6.0) == pytest.approx(4.0)


def test_geodesic_of_exponential(rng: np.random.Generator) -> None:
    """Test that the geodesic distance from I to exp(v) is |v|."""
    for _ in range(200):
        v = rng.normal(size=3)
        v *= rng.uniform(0.0, np.pi - 1e-3) / np.linalg.norm(v)
        R = exp_map(AxisAngle(v=tuple(v)))
        assert g_geodesic(RotationMatrix.identity(), R) == pytest.approx(
            np.degrees(np.linalg.norm(v)), abs=1e-8
        )


def test_geodesic_is_precise_near_zero() -> None:
    """Test small angles that an arccos would round to zero."""
    R = _euler(0.0, 0.0, 0.0)
    assert g_geodesic(R, perturb(R, 1e-6)) == pytest.approx(1e-6, rel=1e-6)


@pytest.mark.slow
def test_geodesic_metric_axioms() -> None:
    """Test identity, symmetry, range and the triangle inequality on 10⁴ triples."""
    a, b, c = (Rotation.random(10_000, random_state=s).as_matrix() for s in (1, 2, 3))
    ab, ba = geodesic_angles(a, b), geodesic_angles(b, a)
    bc, ac = geodesic_angles(b, c), geodesic_angles(a, c)
    assert np.allclose(geodesic_angles(a, a), 0.0, atol=1e-7)
    assert np.allclose(ab, ba, atol=1e-12)
    assert np.all((ab >= 0.0) & (ab <= np.pi))
    assert np.min(ab + bc - ac) >= -1e-9


def test_geodesic_invariance(random_matrices: np.ndarray) -> None:
    """Test left and right invariance."""
    a, b = random_matrices[:500], random_matrices[500:]
    q = Rotation.from_euler("xyz", [10, 20, 30], degrees=True).as_matrix()
    base = g_geodesic_many(a, b)
    assert np.allclose(g_geodesic_many(q @ a, q @ b), base, atol=1e-8)
    assert np.allclose(g_geodesic_many(a @ q, b @ q), base, atol=1e-8)


def test_chordal_geodesic_relation(random_matrices: np.ndarray) -> None:
    """Test chordal = 2√2·sin(θ/2) on 10³ pairs."""
    others = np.roll(random_matrices, 1, axis=0)
    for m1, m2 in zip(random_matrices, others):
        R_hat, R = RotationMatrix(m=m1), RotationMatrix(m=m2)
        theta = np.deg2rad(g_geodesic(R_hat, R))
        assert g_chordal(R_hat, R) == pytest.approx(2 * np.sqrt(2) * np.sin(theta / 2), abs=1e-9)
        assert g_dev_identity(R_hat, R) == pytest.approx(g_chordal(R_hat, R), abs=1e-9)


def test_gimbal_lock_coherence() -> None:
    """Test that nearby poses across yaw 90° have small GE but large Euler errors."""
    R_hat = _euler(60.0, 89.5, -10.0)
    R = _euler(-10.0, 90.5, 60.0)
    assert g_geodesic(R_hat, R) <= 1.01
    assert evaluate_metric(MetricId.MAE, R_hat, R).value >= 30.0

    same_side = _euler(-10.0, 89.5, 60.0)
    assert g_geodesic(R_hat, same_side) <= 1.01
    assert evaluate_metric(MetricId.MAE, R_hat, same_side).value == pytest.approx(140.0, abs=1e-6)


def test_f_ge_and_mae_per_angle() -> None:
    """Test set-level metrics."""
    R = _euler(5.0, 20.0, -5.0)
    pairs = [(perturb(R, 2.0), R), (perturb(R, 4.0, axis=(1.0, 0.0, 0.0)), R)]
    assert f_ge(pairs) == pytest.approx(3.0, abs=1e-9)
    assert f_ge([(R, R)]) == pytest.approx(0.0, abs=1e-6)

    errors = mae_per_angle([(_euler(1.0, 2.0, 3.0), _euler(0.0, 0.0, 0.0))])
    assert (errors.pitch, errors.yaw, errors.roll) == pytest.approx((1.0, 2.0, 3.0), abs=1e-9)
    assert errors.mean == pytest.approx(2.0, abs=1e-9)

    wrapped = mae_per_angle([(_euler(0.0, 0.0, 179.0), _euler(0.0, 0.0, -179.0))], wrapped=True)
    assert wrapped.roll == pytest.approx(2.0, abs=1e-9)
    raw = mae_per_angle([(_euler(0.0, 0.0, 179.0), _euler(0.0, 0.0, -179.0))])
    assert raw.roll == pytest.approx(358.0, abs=1e-9)

    with pytest.raises(EmptyInputError):
        f_ge([])


@pytest.mark.parametrize("metric_id", list(MetricId))
def test_evaluate_metric_dispatch(metric_id: MetricId) -> None:
    """Test every metric is zero on identical poses and positive otherwise."""
    R = _euler(10.0, 20.0, 30.0)
    assert evaluate_metric(metric_id, R, R).value == pytest.approx(0.0, abs=1e-6)
    other = _euler(12.0, 25.0, 27.0)
    result = evaluate_metric(metric_id, other, R)
    assert result.metric_id == metric_id
    assert result.value > 0.0
