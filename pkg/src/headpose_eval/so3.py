"""Rotation representations and conversions.

Euler angles follow the head pose convention: rotate about the camera X axis
(pitch), then Y (yaw), then Z (roll), R = Rz(roll)·Ry(yaw)·Rx(pitch), with the
elementary matrices written in ``_elementary_x/y/z``. Those matrices are the
transposes of the usual textbook ones; every other conversion is defined
relative to ``euler_to_rotation``.
"""
import logging
from typing import Optional, Union

import numpy as np

from .errors import DegenerateRepresentationError, InvalidArgumentError
from .models import (
    AxisAngle,
    EulerAnglesPYR,
    RotationMatrix,
    SixD,
    UnitQuaternion,
)

logger = logging.getLogger(__name__)

LOCK_DEGENERACY = 1e-12
SMALL_ANGLE = 1e-7
NEAR_PI = 1e-3
SIXD_DEGENERACY = 1e-12

AngleRange = tuple[float, float]
SeedLike = Union[int, np.random.Generator, None]


def wrap_degrees(angle: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """Reduce angles to [−180, 180)."""
    wrapped = np.mod(np.asarray(angle, dtype=float) + 180.0, 360.0) - 180.0
    return float(wrapped) if np.ndim(wrapped) == 0 else wrapped


def _elementary_x(p: np.ndarray) -> np.ndarray:
    c, s = np.cos(p), np.sin(p)
    out = np.zeros(p.shape + (3, 3))
    out[..., 0, 0] = 1.0
    out[..., 1, 1], out[..., 1, 2] = c, s
    out[..., 2, 1], out[..., 2, 2] = -s, c
    return out


def _elementary_y(y: np.ndarray) -> np.ndarray:
    c, s = np.cos(y), np.sin(y)
    out = np.zeros(y.shape + (3, 3))
    out[..., 0, 0], out[..., 0, 2] = c, -s
    out[..., 1, 1] = 1.0
    out[..., 2, 0], out[..., 2, 2] = s, c
    return out


def _elementary_z(r: np.ndarray) -> np.ndarray:
    c, s = np.cos(r), np.sin(r)
    out = np.zeros(r.shape + (3, 3))
    out[..., 0, 0], out[..., 0, 1] = c, s
    out[..., 1, 0], out[..., 1, 1] = -s, c
    out[..., 2, 2] = 1.0
    return out


def euler_matrices(angles: np.ndarray) -> np.ndarray:
    """Compose rotation matrices from an (N, 3) array of (pitch, yaw, roll) degrees.

    Returns:
        (N, 3, 3) array of Rz(roll)·Ry(yaw)·Rx(pitch)
    """
    angles = np.asarray(angles, dtype=float)
    if angles.ndim != 2 or angles.shape[1] != 3:
        raise InvalidArgumentError(f"expected (N, 3) Euler angles, got shape {angles.shape}")
    if not np.all(np.isfinite(angles)):
        raise InvalidArgumentError("Euler angles must be finite")
    rad = np.deg2rad(angles)
    return _elementary_z(rad[:, 2]) @ _elementary_y(rad[:, 1]) @ _elementary_x(rad[:, 0])


def euler_to_rotation(e: EulerAnglesPYR) -> RotationMatrix:
    """Compose the rotation of a (pitch, yaw, roll) triple.

    Args:
        e: Angles in degrees

    Returns:
        Rz(roll)·Ry(yaw)·Rx(pitch)

    Raises:
        InvalidArgumentError: If any angle is not finite
    """
    return RotationMatrix(m=euler_matrices(e.as_array()[None, :])[0])


def euler_decompose(ms: np.ndarray) -> np.ndarray:
    """Principal-branch (pitch, yaw, roll) degrees of an (N, 3, 3) stack.

    yaw ∈ [−90, 90]. Only when cos(yaw) vanishes (hypot(R00, R10) < 1e-12) are pitch
    and roll unrecoverable; there yaw is set to ±90, roll to 0 and pitch carries
    the combined angle. Near but off the lock the atan2 branch reproduces R exactly.
    """
    ms = np.asarray(ms, dtype=float)
    r20 = ms[:, 2, 0]
    cos_yaw = np.hypot(ms[:, 0, 0], ms[:, 1, 0])
    yaw = np.degrees(np.arctan2(r20, cos_yaw))
    pitch = np.degrees(np.arctan2(-ms[:, 2, 1], ms[:, 2, 2]))
    roll = np.degrees(np.arctan2(-ms[:, 1, 0], ms[:, 0, 0]))

    locked = cos_yaw < LOCK_DEGENERACY
    if np.any(locked):
        yaw = np.where(locked, np.copysign(90.0, r20), yaw)
        pitch = np.where(locked, np.degrees(np.arctan2(ms[:, 1, 2], ms[:, 1, 1])), pitch)
        roll = np.where(locked, 0.0, roll)
    return np.stack([wrap_degrees(pitch), yaw, wrap_degrees(roll)], axis=-1)


def euler_decompose_wide(ms: np.ndarray) -> np.ndarray:
    """Wide-range (pitch, yaw, roll): pitch ∈ [−90, 90], yaw ∈ [−180, 180)."""
    principal = euler_decompose(ms)
    pitch, yaw, roll = principal[:, 0], principal[:, 1], principal[:, 2]
    flipped = np.abs(pitch) > 90.0
    return np.stack(
        [
            np.where(flipped, wrap_degrees(pitch + 180.0), pitch),
            np.where(flipped, wrap_degrees(180.0 - yaw), wrap_degrees(yaw)),
            np.where(flipped, wrap_degrees(roll + 180.0), roll),
        ],
        axis=-1,
    )


def rotation_to_euler(R: RotationMatrix) -> EulerAnglesPYR:
    """Principal-branch Euler angles reproducing R through euler_to_rotation.

    At gimbal lock the returned triple is the representative with roll = 0 of
    the family whose pitch and roll combine to the same angle.
    """
    pitch, yaw, roll = euler_decompose(R.m[None])[0]
    return EulerAnglesPYR(pitch=pitch, yaw=yaw, roll=roll)


def rotation_to_euler_wide(R: RotationMatrix) -> EulerAnglesPYR:
    """Euler angles on the wide-range branch (|pitch| ≤ 90°, full yaw circle)."""
    pitch, yaw, roll = euler_decompose_wide(R.m[None])[0]
    return EulerAnglesPYR(pitch=pitch, yaw=yaw, roll=roll)


def gimbal_lock_matrix(alpha: float, yaw_sign: int = 1) -> RotationMatrix:
    """Closed form of euler_to_rotation at yaw = ±90°.

    Args:
        alpha: pitch + roll for yaw = +90°, pitch − roll for yaw = −90° (degrees)
        yaw_sign: +1 or −1
    """
    if yaw_sign not in (1, -1):
        raise InvalidArgumentError(f"yaw_sign must be +1 or -1, got {yaw_sign}")
    s, c = np.sin(np.deg2rad(alpha)), np.cos(np.deg2rad(alpha))
    if yaw_sign == 1:
        m = [[0.0, s, -c], [0.0, c, s], [1.0, 0.0, 0.0]]
    else:
        m = [[0.0, -s, c], [0.0, c, s], [-1.0, 0.0, 0.0]]
    return RotationMatrix(m=m)


def near_gimbal_lock_matrix(pitch: float, roll: float, delta: float) -> np.ndarray:
    """First-order expansion in δ of euler_to_rotation(pitch, 90° + δ, roll).

    All arguments are degrees. The result is not orthonormal; it agrees with the
    exact product up to O(δ²).
    """
    p, r, d = np.deg2rad(pitch), np.deg2rad(roll), np.deg2rad(delta)
    s, c = np.sin(p + r), np.cos(p + r)
    return np.array(
        [
            [-d * np.cos(r), s, -c],
            [d * np.sin(r), c, s],
            [1.0, d * np.sin(p), -d * np.cos(p)],
        ]
    )


def quat_to_rotation(q: UnitQuaternion) -> RotationMatrix:
    """Hamilton quaternion to rotation matrix; q and −q give the same matrix."""
    w, x, y, z = q.as_array()
    return RotationMatrix(
        m=[
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def rotation_to_quat(R: RotationMatrix) -> UnitQuaternion:
    """Rotation matrix to canonical (w ≥ 0) quaternion.

    Uses the branch with the largest of trace and diagonal entries so that the
    divisor never vanishes.
    """
    m = R.m
    trace = m[0, 0] + m[1, 1] + m[2, 2]
    branch = int(np.argmax([trace, m[0, 0], m[1, 1], m[2, 2]]))
    if branch == 0:
        s = 2.0 * np.sqrt(1.0 + trace)
        w = s / 4
        x = (m[2, 1] - m[1, 2]) / s
        y = (m[0, 2] - m[2, 0]) / s
        z = (m[1, 0] - m[0, 1]) / s
    elif branch == 1:
        s = 2.0 * np.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2])
        w = (m[2, 1] - m[1, 2]) / s
        x = s / 4
        y = (m[0, 1] + m[1, 0]) / s
        z = (m[0, 2] + m[2, 0]) / s
    elif branch == 2:
        s = 2.0 * np.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2])
        w = (m[0, 2] - m[2, 0]) / s
        x = (m[0, 1] + m[1, 0]) / s
        y = s / 4
        z = (m[1, 2] + m[2, 1]) / s
    else:
        s = 2.0 * np.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1])
        w = (m[1, 0] - m[0, 1]) / s
        x = (m[0, 2] + m[2, 0]) / s
        y = (m[1, 2] + m[2, 1]) / s
        z = s / 4
    return UnitQuaternion(w=w, x=x, y=y, z=z).canonical()



def sixd_to_rotation(s: SixD) -> RotationMatrix:
    """Recover a rotation from two (not necessarily orthonormal) columns.

    Raises:
        DegenerateRepresentationError: If c1 vanishes or c2 is parallel to c1
    """
    c1 = np.asarray(s.c1, dtype=float)
    c2 = np.asarray(s.c2, dtype=float)
    n1 = np.linalg.norm(c1)
    if n1 <= SIXD_DEGENERACY:
        raise DegenerateRepresentationError(f"first 6D column has norm {n1:.3e}")
    b1 = c1 / n1
    perp = c2 - (b1 @ c2) * b1
    n2 = np.linalg.norm(perp)
    if n2 <= SIXD_DEGENERACY * max(1.0, float(np.linalg.norm(c2))):
        raise DegenerateRepresentationError("second 6D column is parallel to the first")
    b2 = perp / n2
    # second pass keeps b2 orthogonal when c2 is nearly parallel to c1
    b2 = b2 - (b1 @ b2) * b1
    b2 = b2 / np.linalg.norm(b2)
    return RotationMatrix(m=np.column_stack([b1, b2, np.cross(b1, b2)]))


def rotation_to_sixd(R: RotationMatrix) -> SixD:
    """First two columns of R."""
    return SixD(c1=tuple(R.m[:, 0]), c2=tuple(R.m[:, 1]))


def hat(v: np.ndarray) -> np.ndarray:
    """Skew-symmetric matrices of an (..., 3) array of vectors."""
    v = np.asarray(v, dtype=float)
    out = np.zeros(v.shape[:-1] + (3, 3))
    out[..., 0, 1], out[..., 0, 2] = -v[..., 2], v[..., 1]
    out[..., 1, 0], out[..., 1, 2] = v[..., 2], -v[..., 0]
    out[..., 2, 0], out[..., 2, 1] = -v[..., 1], v[..., 0]
    return out


def vee(m: np.ndarray) -> np.ndarray:
    """Inverse of hat: the vectors of (..., 3, 3) skew-symmetric matrices."""
    m = np.asarray(m, dtype=float)
    return np.stack([m[..., 2, 1], m[..., 0, 2], m[..., 1, 0]], axis=-1)


def exp_map_batch(vs: np.ndarray) -> np.ndarray:
    """Rodrigues formula for an (N, 3) array of rotation vectors (radians)."""
    vs = np.asarray(vs, dtype=float)
    if not np.all(np.isfinite(vs)):
        raise InvalidArgumentError("rotation vectors must be finite")
    theta = np.linalg.norm(vs, axis=-1)
    small = theta < SMALL_ANGLE
    safe = np.where(small, 1.0, theta)
    a = np.where(small, 1.0 - theta**2 / 6.0, np.sin(safe) / safe)
    b = np.where(small, 0.5 - theta**2 / 24.0, (1.0 - np.cos(safe)) / safe**2)
    k = hat(vs)
    return np.eye(3) + a[..., None, None] * k + b[..., None, None] * (k @ k)


def _log_near_pi(m: np.ndarray, w: np.ndarray, theta: float, cos_theta: float) -> np.ndarray:
    # symmetric part is cosθ·I + (1 − cosθ)·n·nᵀ
    outer = ((m + m.T) / 2.0 - cos_theta * np.eye(3)) / (1.0 - cos_theta)
    j = int(np.argmax(np.diag(outer)))
    axis = outer[:, j] / np.sqrt(max(outer[j, j], np.finfo(float).tiny))
    axis = axis / np.linalg.norm(axis)
    alignment = float(axis @ w)
    if abs(alignment) > 1e-12 and alignment < 0.0:
        axis = -axis
    return theta * axis


def log_map_batch(ms: np.ndarray) -> np.ndarray:
    """Rotation vectors (radians, norm in [0, π]) of an (N, 3, 3) stack."""
    ms = np.asarray(ms, dtype=float)
    w = 0.5 * vee(ms - np.swapaxes(ms, -1, -2))
    sin_theta = np.linalg.norm(w, axis=-1)
    cos_theta = np.clip((np.trace(ms, axis1=-2, axis2=-1) - 1.0) / 2.0, -1.0, 1.0)
    theta = np.arctan2(sin_theta, cos_theta)

    out = np.empty_like(w)
    small = theta < SMALL_ANGLE
    near_pi = theta > np.pi - NEAR_PI
    generic = ~(small | near_pi)
    out[small] = w[small] * (1.0 + theta[small] ** 2 / 6.0)[:, None]
    out[generic] = w[generic] * (theta[generic] / sin_theta[generic])[:, None]
    for i in np.flatnonzero(near_pi):
        out[i] = _log_near_pi(ms[i], w[i], theta[i], cos_theta[i])
    return out


def exp_map(v: AxisAngle) -> RotationMatrix:
    """Rotation about v/|v| by |v| radians."""
    return RotationMatrix(m=exp_map_batch(np.asarray(v.v)[None])[0])


def log_map(R: RotationMatrix) -> AxisAngle:
    """Inverse of exp_map with rotation angle in [0, π].

    At exactly π the axis is read from the largest diagonal entry of the
    symmetric part and oriented with that component positive.
    """
    return AxisAngle(v=tuple(log_map_batch(R.m[None])[0]))


def project_to_rotation(m: np.ndarray) -> RotationMatrix:
    """Nearest rotation matrix in the Frobenius sense."""
    u, _, vt = np.linalg.svd(np.asarray(m, dtype=float))
    d = np.sign(np.linalg.det(u @ vt))
    return RotationMatrix(m=u @ np.diag([1.0, 1.0, d]) @ vt)


def compose(A: RotationMatrix, B: RotationMatrix) -> RotationMatrix:
    """The product A·B, applying B first."""
    return RotationMatrix(m=A.m @ B.m)


def inverse(R: RotationMatrix) -> RotationMatrix:
    """The transpose of R."""
    return RotationMatrix(m=R.m.T)


def _check_range(name: str, bounds: AngleRange) -> AngleRange:
    low, high = float(bounds[0]), float(bounds[1])
    if not (np.isfinite(low) and np.isfinite(high)) or low > high:
        raise InvalidArgumentError(f"invalid {name} range {bounds}")
    return low, high


class RotationSampler:
    """Seeded sampler of Euler angles uniform within per-angle ranges.

    A sampler owns its generator; do not share one between threads.
    """

    def __init__(self, seed: SeedLike = None) -> None:
        """Initialize the sampler.

        Args:
            seed: Integer seed, an existing generator, or None for fresh entropy
        """
        self.rng = np.random.default_rng(seed)

    def sample_angles(
        self,
        n: int,
        yaw_range: AngleRange,
        pitch_range: AngleRange,
        roll_range: AngleRange,
    ) -> np.ndarray:
        """Draw n (pitch, yaw, roll) triples in degrees as an (n, 3) array."""
        if n < 0:
            raise InvalidArgumentError(f"sample count must be non-negative, got {n}")
        yaw = self.rng.uniform(*_check_range("yaw", yaw_range), size=n)
        pitch = self.rng.uniform(*_check_range("pitch", pitch_range), size=n)
        roll = self.rng.uniform(*_check_range("roll", roll_range), size=n)
        return np.stack([pitch, yaw, roll], axis=-1)

    def sample_euler(
        self, yaw_range: AngleRange, pitch_range: AngleRange, roll_range: AngleRange
    ) -> EulerAnglesPYR:
        pitch, yaw, roll = self.sample_angles(1, yaw_range, pitch_range, roll_range)[0]
        return EulerAnglesPYR(pitch=pitch, yaw=yaw, roll=roll)

    def sample(
        self, yaw_range: AngleRange, pitch_range: AngleRange, roll_range: AngleRange
    ) -> RotationMatrix:
        return euler_to_rotation(self.sample_euler(yaw_range, pitch_range, roll_range))


def sample_euler(
    yaw_range: AngleRange,
    pitch_range: AngleRange,
    roll_range: AngleRange,
    seed: SeedLike = None,
) -> EulerAnglesPYR:
    return RotationSampler(seed).sample_euler(yaw_range, pitch_range, roll_range)


def random_rotation(
    yaw_range: AngleRange,
    pitch_range: AngleRange,
    roll_range: AngleRange,
    seed: SeedLike = None,
) -> RotationMatrix:
    """Compose a rotation from Euler angles drawn uniformly in the given ranges.

    Passing the same generator repeatedly continues its stream; passing the same
    integer seed reproduces the same rotation.
    """
    return RotationSampler(seed).sample(yaw_range, pitch_range, roll_range)


def as_rotation(m: np.ndarray, tolerance: Optional[float] = None) -> RotationMatrix:
    """Validate a 3x3 array as a rotation, projecting it when its defect is within tolerance.

    Raises:
        InvalidArgumentError: If the matrix is further than the tolerance from SO(3)
    """
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3) or not np.all(np.isfinite(m)):
        raise InvalidArgumentError("expected a finite 3x3 matrix")
    orth = float(np.linalg.norm(m.T @ m - np.eye(3)))
    det = float(np.linalg.det(m))
    if tolerance is not None and orth <= tolerance and det > 0.0:
        if orth > 1e-12:
            logger.debug(f"Projecting matrix with Frobenius defect {orth:.3e} onto SO(3)")
        return project_to_rotation(m)
    try:
        return RotationMatrix(m=m)
    except ValueError as e:
        raise InvalidArgumentError(
            f"not a rotation matrix (Frobenius defect {orth:.3e}, det {det:.9f})"
        ) from e
