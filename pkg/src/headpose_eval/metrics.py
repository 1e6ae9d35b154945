import logging
from collections.abc import Sequence
from typing import Union

import numpy as np

from .errors import EmptyInputError, InvalidArgumentError
from .models import AngleErrors, EulerTriple, MetricId, MetricResult, RotationMatrix
from .so3 import euler_decompose, rotation_to_euler, vee

logger = logging.getLogger(__name__)

RotationPair = tuple[RotationMatrix, RotationMatrix]
ArrayOrFloat = Union[float, np.ndarray]


def wrapped_diff(a: ArrayOrFloat, b: ArrayOrFloat, norm_order: int = 1) -> ArrayOrFloat:
    """Periodic difference between angles, in [0, 180] degrees.

    Args:
        a: Angle(s) in degrees
        b: Angle(s) in degrees
        norm_order: 1 or 2; both reduce to the absolute value for scalar angles

    Returns:
        min(|a − b|, 360 − |a − b|) after reducing a − b modulo 360
    """
    if norm_order not in (1, 2):
        raise InvalidArgumentError(f"norm_order must be 1 or 2, got {norm_order}")
    diff = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    if not np.all(np.isfinite(diff)):
        raise InvalidArgumentError("angles must be finite")
    diff = np.mod(diff, 360.0)
    result = np.minimum(diff, 360.0 - diff)
    return float(result) if np.ndim(result) == 0 else result


def g_mae(p_hat: EulerTriple, p: EulerTriple) -> float:
    """L1 norm of the raw Euler differences (no periodic wrapping)."""
    return float(np.sum(np.abs(p_hat.as_array() - p.as_array())))


def g_mse(p_hat: EulerTriple, p: EulerTriple) -> float:
    """Squared L2 norm of the raw Euler differences, degrees²."""
    return float(np.sum((p_hat.as_array() - p.as_array()) ** 2))


def g_rmse(p_hat: EulerTriple, p: EulerTriple) -> float:
    return float(np.sqrt(g_mse(p_hat, p)))


def g_euc(p_hat: EulerTriple, p: EulerTriple) -> float:
    """Sum of the per-angle periodic differences."""
    return float(np.sum(wrapped_diff(p_hat.as_array(), p.as_array(), norm_order=1)))


def g_wrapped_yaw(yaw_hat: float, yaw: float) -> float:
    return float(wrapped_diff(yaw_hat, yaw, norm_order=2))


def g_chordal(R_hat: RotationMatrix, R: RotationMatrix) -> float:
    """Frobenius norm of R − R̂ (unitless)."""
    return float(np.linalg.norm(R.m - R_hat.m))


def g_dev_identity(R_hat: RotationMatrix, R: RotationMatrix) -> float:
    """Frobenius norm of I − R̂Rᵀ (unitless)."""
    return float(np.linalg.norm(np.eye(3) - R_hat.m @ R.m.T))


def geodesic_angles(pred: np.ndarray, gt: np.ndarray) -> np.ndarray:
    """Geodesic distance in radians between matching (N, 3, 3) stacks.

    Evaluated as atan2(|vee(M − Mᵀ)| / 2, (tr M − 1) / 2) with M = R̂Rᵀ and the
    cosine clamped to [−1, 1]; this equals arccos((tr M − 1) / 2) but keeps full
    precision near 0 and π.
    """
    rel = np.asarray(pred, dtype=float) @ np.swapaxes(np.asarray(gt, dtype=float), -1, -2)
    sin_theta = np.linalg.norm(0.5 * vee(rel - np.swapaxes(rel, -1, -2)), axis=-1)
    cos_theta = np.clip((np.trace(rel, axis1=-2, axis2=-1) - 1.0) / 2.0, -1.0, 1.0)
    return np.arctan2(sin_theta, cos_theta)


def g_geodesic(R_hat: RotationMatrix, R: RotationMatrix) -> float:
    """Geodesic distance between two rotations in degrees, in [0, 180]."""
    return float(np.degrees(geodesic_angles(R_hat.m[None], R.m[None])[0]))


def g_geodesic_many(pred: np.ndarray, gt: np.ndarray) -> np.ndarray:
    """Vectorized g_geodesic over (N, 3, 3) stacks, in degrees."""
    return np.degrees(geodesic_angles(pred, gt))


def stack_pairs(pairs: Sequence[RotationPair]) -> tuple[np.ndarray, np.ndarray]:
    """Split (prediction, ground truth) pairs into two (N, 3, 3) arrays.

    Raises:
        EmptyInputError: If there are no pairs
    """
    if len(pairs) == 0:
        raise EmptyInputError("at least one (prediction, ground truth) pair is required")
    pred = np.stack([p.m for p, _ in pairs])
    gt = np.stack([g.m for _, g in pairs])
    return pred, gt


def f_ge(pairs: Sequence[RotationPair]) -> float:
    """Mean geodesic error over a data set, in degrees."""
    pred, gt = stack_pairs(pairs)
    return float(np.mean(g_geodesic_many(pred, gt)))


def euler_errors(pred: np.ndarray, gt: np.ndarray, wrapped: bool = False) -> np.ndarray:
    """Per-sample absolute (pitch, yaw, roll) errors of principal decompositions.

    Returns:
        (N, 3) array in degrees
    """
    angles_pred = euler_decompose(pred)
    angles_gt = euler_decompose(gt)
    if wrapped:
        return np.asarray(wrapped_diff(angles_pred, angles_gt))
    return np.abs(angles_pred - angles_gt)


def angle_errors(errors: np.ndarray) -> AngleErrors:
    pitch, yaw, roll = (float(v) for v in np.mean(errors, axis=0))
    return AngleErrors(yaw=yaw, pitch=pitch, roll=roll, mean=(yaw + pitch + roll) / 3.0)


def mae_per_angle(pairs: Sequence[RotationPair], wrapped: bool = False) -> AngleErrors:
    """Mean absolute yaw, pitch and roll errors and their mean.

    Args:
        pairs: (prediction, ground truth) rotations
        wrapped: Use periodic differences instead of raw ones
    """
    pred, gt = stack_pairs(pairs)
    return angle_errors(euler_errors(pred, gt, wrapped=wrapped))


def evaluate_metric(metric_id: MetricId, R_hat: RotationMatrix, R: RotationMatrix) -> MetricResult:
    """Evaluate any pairwise metric; Euler metrics use principal decompositions."""
    if metric_id == MetricId.GEODESIC:
        value = g_geodesic(R_hat, R)
    elif metric_id == MetricId.CHORDAL:
        value = g_chordal(R_hat, R)
    elif metric_id == MetricId.DEV_IDENTITY:
        value = g_dev_identity(R_hat, R)
    else:
        p_hat, p = rotation_to_euler(R_hat), rotation_to_euler(R)
        euler_metrics = {
            MetricId.MAE: g_mae,
            MetricId.MSE: g_mse,
            MetricId.RMSE: g_rmse,
            MetricId.EUC: g_euc,
        }
        if metric_id == MetricId.WRAPPED_YAW:
            value = g_wrapped_yaw(p_hat.yaw, p.yaw)
        else:
            value = euler_metrics[metric_id](p_hat, p)
    return MetricResult(metric_id=metric_id, value=value)
