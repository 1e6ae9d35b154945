from enum import Enum
from typing import Any, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

ROTATION_TOLERANCE = 1e-9
QUATERNION_TOLERANCE = 1e-6


def rotation_defects(m: np.ndarray) -> tuple[float, float]:
    """Measure how far a 3x3 array is from SO(3).

    Returns:
        Frobenius norm of mᵀm − I and |det(m) − 1|
    """
    orth = float(np.linalg.norm(m.T @ m - np.eye(3)))
    det = float(abs(np.linalg.det(m) - 1.0))
    return orth, det


class Representation(str, Enum):
    """Pose encodings accepted in pose files.

    Attributes:
        EULER_DEG: pitch, yaw, roll in degrees
        QUATERNION_WXYZ: unit quaternion, scalar first
        MATRIX_ROWMAJOR: the nine rotation matrix entries, row by row
        SIXD: first two matrix columns
    """
    EULER_DEG = "euler_deg"
    QUATERNION_WXYZ = "quaternion_wxyz"
    MATRIX_ROWMAJOR = "matrix_rowmajor"
    SIXD = "sixd"


class FileFormat(str, Enum):
    CSV = "csv"
    JSONL = "jsonl"


class ReportFormat(str, Enum):
    JSON = "json"
    CSV_SUMMARY = "csv-summary"


class RotationMatrix(BaseModel):
    """A 3x3 rotation matrix (orthonormal, determinant +1).

    Attributes:
        m: Read-only 3x3 array of direction cosines
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    m: np.ndarray = Field(..., description="3x3 direction cosine matrix")

    @field_validator("m", mode="before")
    @classmethod
    def _check_rotation(cls, value: Any) -> np.ndarray:
        m = np.array(value, dtype=float)
        if m.shape != (3, 3):
            raise ValueError(f"rotation matrix must be 3x3, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("rotation matrix has non-finite entries")
        orth, det = rotation_defects(m)
        if orth > ROTATION_TOLERANCE:
            raise ValueError(f"matrix is not orthonormal: Frobenius defect {orth:.3e}")
        if det > ROTATION_TOLERANCE:
            raise ValueError(f"matrix determinant differs from +1 by {det:.3e}")
        m.setflags(write=False)
        return m

    @classmethod
    def identity(cls) -> "RotationMatrix":
        return cls(m=np.eye(3))

    def as_rows(self) -> list[list[float]]:
        return [[float(v) for v in row] for row in self.m]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RotationMatrix):
            return NotImplemented
        return bool(np.array_equal(self.m, other.m))


class EulerAnglesPYR(BaseModel):
    """Pitch, yaw and roll in degrees.

    The rotation is Rz(roll)·Ry(yaw)·Rx(pitch) with the elementary matrices of
    ``headpose_eval.so3``. Any finite value is accepted; decompositions return
    the principal branch pitch ∈ [−180, 180), yaw ∈ [−90, 90], roll ∈ [−180, 180).

    Attributes:
        pitch: Rotation about the camera X axis
        yaw: Rotation about the camera Y axis
        roll: Rotation about the camera Z axis
    """
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    pitch: float = Field(..., description="Pitch angle in degrees")
    yaw: float = Field(..., description="Yaw angle in degrees")
    roll: float = Field(..., description="Roll angle in degrees")

    def as_array(self) -> np.ndarray:
        return np.array([self.pitch, self.yaw, self.roll], dtype=float)


# The pose vector p = (pitch, yaw, roll) compared by the Euler metrics.
EulerTriple = EulerAnglesPYR


class UnitQuaternion(BaseModel):
    """Hamilton unit quaternion, scalar first.

    Inputs whose norm is within 1e-6 of one are renormalized; anything further
    away is rejected.
    """
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    w: float
    x: float
    y: float
    z: float

    @model_validator(mode="before")
    @classmethod
    def _normalize(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        try:
            q = np.array([float(data[k]) for k in ("w", "x", "y", "z")])
        except (KeyError, TypeError, ValueError):
            return data
        if not np.all(np.isfinite(q)):
            raise ValueError("quaternion has non-finite components")
        norm = float(np.linalg.norm(q))
        if abs(norm - 1.0) > QUATERNION_TOLERANCE:
            raise ValueError(f"quaternion norm {norm:.9f} is not unit")
        q = q / norm
        return {**data, "w": q[0], "x": q[1], "y": q[2], "z": q[3]}

    def as_array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z], dtype=float)

    def canonical(self) -> "UnitQuaternion":
        """Representative with w ≥ 0; when w == 0 the first nonzero of x, y, z is positive."""
        q = self.as_array()
        sign = 1.0
        if q[0] < 0.0:
            sign = -1.0
        elif q[0] == 0.0:
            nonzero = q[1:][q[1:] != 0.0]
            if nonzero.size and nonzero[0] < 0.0:
                sign = -1.0
        if sign > 0.0:
            return self
        return UnitQuaternion(w=-q[0], x=-q[1], y=-q[2], z=-q[3])


class SixD(BaseModel):
    """Continuous 6D representation: two 3-vectors recovered by Gram-Schmidt."""
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    c1: tuple[float, float, float] = Field(..., description="First matrix column")
    c2: tuple[float, float, float] = Field(..., description="Second matrix column")


class AxisAngle(BaseModel):
    """Rotation vector: direction is the axis, magnitude the angle in radians."""
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    v: tuple[float, float, float]

    @property
    def angle(self) -> float:
        return float(np.linalg.norm(self.v))


class OpalParams(BaseModel):
    """Opal loss parameters and their derived constants.

    Angles are in degrees and σ is per degree. The constants a, b, c, d make the
    loss continuous and once differentiable at ε and β; build instances with
    ``headpose_eval.opal.derive_constants``.

    Attributes:
        epsilon: Threshold between the quadratic and tanh branches
        beta: Threshold between the tanh and linear branches
        mu: Offset of the tanh argument
        sigma: Scale of the tanh argument
        a: Quadratic coefficient
        b: Quadratic offset
        c: tanh amplitude
        d: Linear offset
    """
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    epsilon: float = Field(..., gt=0.0, description="L2 to tanh threshold (degrees)")
    beta: float = Field(..., le=180.0, description="tanh to L1 threshold (degrees)")
    mu: float = Field(..., description="tanh offset (unitless)")
    sigma: float = Field(..., gt=0.0, description="tanh scale (per degree)")
    a: float
    b: float
    c: float
    d: float

    @model_validator(mode="after")
    def _check_invariants(self) -> "OpalParams":
        if not self.epsilon < self.beta:
            raise ValueError(f"epsilon ({self.epsilon}) must be below beta ({self.beta})")
        peak = self.mu / self.sigma
        if not self.epsilon < peak < self.beta:
            raise ValueError(
                f"influence peak mu/sigma = {peak:.6g} must lie inside "
                f"({self.epsilon}, {self.beta})"
            )
        scale = max(1.0, abs(self.c) * max(1.0, self.sigma))
        worst = max(abs(r) for r in self.continuity_residuals())
        if worst > 1e-9 * scale:
            raise ValueError(
                f"constants violate continuity/differentiability (residual {worst:.3e})"
            )
        return self

    @property
    def peak(self) -> float:
        """Error (degrees) at which the influence function is maximal."""
        return self.mu / self.sigma

    def continuity_residuals(self) -> tuple[float, float, float, float]:
        """Value and slope mismatches at ε and at β, in that order."""
        eps, beta, mu, sigma = self.epsilon, self.beta, self.mu, self.sigma
        left = sigma * eps - mu
        right = sigma * beta - mu
        value_eps = self.a * eps**2 + self.b - self.c * (np.tanh(left) + np.tanh(mu))
        value_beta = self.c * (np.tanh(right) + np.tanh(mu)) - (beta + self.d)
        slope_eps = 2.0 * self.a * eps - self.c * sigma / np.cosh(left) ** 2
        slope_beta = self.c * sigma / np.cosh(right) ** 2 - 1.0
        return float(value_eps), float(value_beta), float(slope_eps), float(slope_beta)


class MetricId(str, Enum):
    """Pairwise pose distances."""
    MAE = "mae"
    MSE = "mse"
    RMSE = "rmse"
    EUC = "euc"
    WRAPPED_YAW = "wrapped_yaw"
    CHORDAL = "chordal"
    DEV_IDENTITY = "dev_identity"
    GEODESIC = "geodesic"


class MetricResult(BaseModel):
    """A metric value: degrees (or degrees² for MSE) for angular metrics, unitless otherwise."""
    metric_id: MetricId
    value: float = Field(..., ge=0.0)


class AngleErrors(BaseModel):
    """Mean absolute error per Euler angle and their mean, in degrees."""
    yaw: float
    pitch: float
    roll: float
    mean: float


class KarcherSummary(BaseModel):
    """Outcome of a Karcher mean iteration.

    Attributes:
        mean: The averaged rotation
        iterations: Number of tangent-space steps computed
        final_step_norm: Norm of the last step in radians
        objective_history: Sum of squared geodesic distances (radians²) at each iterate
    """
    mean: RotationMatrix
    iterations: int = Field(..., ge=1)
    final_step_norm: float
    objective_history: list[float] = Field(default_factory=list)


class AlignmentResult(BaseModel):
    """Estimated reference-frame misalignment and its effect on the GE.

    Attributes:
        delta_hat: Karcher mean of the residuals R̂ᵢᵀRᵢ
        iterations: Karcher iterations
        final_step_norm: Last step norm in radians
        ge_before: Mean geodesic error before alignment (degrees)
        ge_after: Mean geodesic error after alignment (degrees)
        transposed: Whether predictions were aligned with Δ̂ᵀ instead of Δ̂
    """
    delta_hat: RotationMatrix
    iterations: int
    final_step_norm: float
    ge_before: float
    ge_after: float
    transposed: bool = False


class SampleRecord(BaseModel):
    """One annotated sample.

    Attributes:
        id: Unique sample identifier
        group: Optional video or sequence key
        ground_truth: Annotated pose
        prediction: Estimated pose, if available
    """
    id: str = Field(..., min_length=1)
    group: Optional[str] = None
    ground_truth: RotationMatrix
    prediction: Optional[RotationMatrix] = None


class YawBin(BaseModel):
    """A named interval of absolute yaw, in degrees."""
    name: str = Field(..., min_length=1)
    low: float = Field(..., ge=0.0, le=180.0)
    high: float = Field(..., ge=0.0, le=180.0)

    @model_validator(mode="after")
    def _check_order(self) -> "YawBin":
        if not self.low < self.high:
            raise ValueError(
                f"bin {self.name!r}: low ({self.low}) must be below high ({self.high})"
            )
        return self


class BinSpec(BaseModel):
    """Ordered, non-overlapping absolute-yaw bins.

    A value on a shared endpoint belongs to the lower bin.
    """
    bins: list[YawBin] = Field(..., min_length=1)

    @model_validator(mode="after")
    def _check_partition(self) -> "BinSpec":
        ordered = sorted(self.bins, key=lambda b: b.low)
        names = [b.name for b in ordered]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate bin names: {names}")
        for lower, upper in zip(ordered, ordered[1:]):
            if upper.low < lower.high:
                raise ValueError(f"bins {lower.name!r} and {upper.name!r} overlap")
        return self

    @classmethod
    def default(cls) -> "BinSpec":
        """Frontal [0, 60], profile [60, 120] and back [120, 180] views."""
        return cls(
            bins=[
                YawBin(name="frontal", low=0.0, high=60.0),
                YawBin(name="profile", low=60.0, high=120.0),
                YawBin(name="back", low=120.0, high=180.0),
            ]
        )

    @classmethod
    def parse(cls, text: str) -> "BinSpec":
        """Parse ``name:low:high,name:low:high,...``."""
        bins = []
        for item in text.split(","):
            parts = item.strip().split(":")
            if len(parts) != 3:
                raise ValueError(f"bin {item!r} is not of the form name:low:high")
            bins.append(YawBin(name=parts[0], low=float(parts[1]), high=float(parts[2])))
        return cls(bins=bins)

    def assign(self, abs_yaw: float) -> Optional[str]:
        for b in sorted(self.bins, key=lambda b: b.low):
            if b.low <= abs_yaw <= b.high:
                return b.name
        return None


class EvalOptions(BaseModel):
    """Options of an evaluation run, recorded in the report provenance."""
    align: bool = False
    group_align: bool = False
    transpose_alignment: bool = False
    bins: BinSpec = Field(default_factory=BinSpec.default)
    opal_params: Optional[OpalParams] = None
    tol: float = Field(default=1e-10, gt=0.0)
    max_iter: int = Field(default=100, ge=1)
    yaw_filter: Optional[tuple[float, float]] = None
    tri_angle_filter: bool = False


class MetricsBlock(BaseModel):
    """Metrics over one set of samples; everything but count is None when empty.

    Attributes:
        count: Number of samples
        ge: Mean geodesic error (degrees)
        mae_raw: Per-angle MAE of unwrapped Euler differences
        mae_wrapped: Per-angle MAE with periodic differences
        euc: Mean Euclidean distance between Euler angles
        chordal: Mean chordal distance
        opal: Mean Opal loss, when parameters were given
    """
    count: int
    ge: Optional[float] = None
    mae_raw: Optional[AngleErrors] = None
    mae_wrapped: Optional[AngleErrors] = None
    euc: Optional[float] = None
    chordal: Optional[float] = None
    opal: Optional[float] = None


class EvalBlock(BaseModel):
    overall: MetricsBlock
    bins: dict[str, MetricsBlock] = Field(default_factory=dict)


class AlignmentEntry(BaseModel):
    """Alignment estimated for one group (or globally when group is None)."""
    group: Optional[str] = None
    count: int
    delta_matrix: list[list[float]]
    delta_euler: EulerAnglesPYR
    delta_angle: float
    iterations: int
    final_step_norm: float
    ge_before: float
    ge_after: float


class Provenance(BaseModel):
    tool_version: str
    input_digests: dict[str, str] = Field(default_factory=dict)
    parameters: dict[str, Any] = Field(default_factory=dict)


class EvalReport(BaseModel):
    """Evaluation results before and, optionally, after alignment.

    Attributes:
        unaligned: Metrics on the raw predictions
        aligned: Metrics on the aligned predictions, when alignment ran
        alignment: One entry per estimated Δ̂
        near_gimbal_ids: Samples within 1° of |yaw| = 90° where Euler columns are unreliable
        notes: Problems that did not prevent the report, e.g. alignment failures
        provenance: Inputs and parameters of the run
    """
    unaligned: EvalBlock
    aligned: Optional[EvalBlock] = None
    alignment: list[AlignmentEntry] = Field(default_factory=list)
    near_gimbal_ids: list[str] = Field(default_factory=list)
    notes: list[str] = Field(default_factory=list)
    provenance: Provenance
