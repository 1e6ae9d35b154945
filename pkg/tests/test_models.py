import numpy as np
import pytest
from pydantic import ValidationError

from headpose_eval.models import (
    BinSpec,
    EulerAnglesPYR,
    EvalOptions,
    OpalParams,
    RotationMatrix,
    UnitQuaternion,
    YawBin,
)
from headpose_eval.opal import default_params


def test_rotation_matrix_validation() -> None:
    """Test RotationMatrix invariants."""
    identity = RotationMatrix.identity()
    assert np.array_equal(identity.m, np.eye(3))
    assert identity.as_rows() == [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]

    with pytest.raises(ValidationError, match="Frobenius defect"):
        RotationMatrix(m=np.eye(3) * 1.001)
    with pytest.raises(ValueError, match="determinant"):
        RotationMatrix(m=np.diag([1.0, 1.0, -1.0]))
    with pytest.raises(ValueError):
        RotationMatrix(m=np.eye(2))
    with pytest.raises(ValueError):
        RotationMatrix(m=[[np.nan, 0, 0], [0, 1, 0], [0, 0, 1]])


def test_rotation_matrix_is_read_only() -> None:
    """Test that the stored array cannot be modified."""
    source = np.eye(3)
    rotation = RotationMatrix(m=source)
    with pytest.raises(ValueError):
        rotation.m[0, 0] = 2.0
    source[0, 0] = 5.0
    assert rotation.m[0, 0] == 1.0


def test_euler_angles_reject_non_finite() -> None:
    """Test EulerAnglesPYR validation."""
    angles = EulerAnglesPYR(pitch=10, yaw=-20, roll=30)
    assert angles.as_array().tolist() == [10.0, -20.0, 30.0]
    with pytest.raises(ValueError):
        EulerAnglesPYR(pitch=float("nan"), yaw=0, roll=0)
    with pytest.raises(ValueError):
        EulerAnglesPYR(pitch=0, yaw=float("inf"), roll=0)


def test_unit_quaternion_normalization() -> None:
    """Test quaternion renormalization and rejection."""
    q = UnitQuaternion(w=1.0 + 5e-7, x=0.0, y=0.0, z=0.0)
    assert np.linalg.norm(q.as_array()) == pytest.approx(1.0, abs=1e-15)

    with pytest.raises(ValueError, match="not unit"):
        UnitQuaternion(w=1.1, x=0.0, y=0.0, z=0.0)


def test_unit_quaternion_canonical() -> None:
    """Test the double-cover representative."""
    half = np.sqrt(0.5)
    assert UnitQuaternion(w=-half, x=0.0, y=half, z=0.0).canonical().as_array().tolist() == \
        pytest.approx([half, 0.0, -half, 0.0])
    assert UnitQuaternion(w=0.0, x=0.0, y=-1.0, z=0.0).canonical().y == 1.0
    positive = UnitQuaternion(w=half, x=half, y=0.0, z=0.0)
    assert positive.canonical() == positive


def test_yaw_bins() -> None:
    """Test the default bins and the boundary convention."""
    spec = BinSpec.default()
    assert [b.name for b in spec.bins] == ["frontal", "profile", "back"]
    assert spec.assign(0.0) == "frontal"
    assert spec.assign(60.0) == "frontal"
    assert spec.assign(65.0) == "profile"
    assert spec.assign(120.0) == "profile"
    assert spec.assign(130.0) == "back"
    assert spec.assign(180.0) == "back"


def test_bin_spec_parse_and_validation() -> None:
    """Test custom bin specifications."""
    spec = BinSpec.parse("near:0:30, far:30:90")
    assert [(b.name, b.low, b.high) for b in spec.bins] == [("near", 0, 30), ("far", 30, 90)]
    assert spec.assign(120.0) is None

    with pytest.raises(ValueError, match="overlap"):
        BinSpec.parse("a:0:40,b:30:90")
    with pytest.raises(ValueError, match="duplicate"):
        BinSpec.parse("a:0:40,a:40:90")
    with pytest.raises(ValueError):
        BinSpec.parse("a:0")
    with pytest.raises(ValueError):
        YawBin(name="x", low=50, high=10)


def test_opal_params_invariants() -> None:
    """Test that inconsistent constants are rejected."""
    params = default_params()
    assert params.peak == pytest.approx(5.5)
    assert max(abs(r) for r in params.continuity_residuals()) < 1e-9

    fields = params.model_dump()
    with pytest.raises(ValueError, match="continuity"):
        OpalParams(**{**fields, "b": fields["b"] + 0.1})
    with pytest.raises(ValueError, match="influence peak"):
        OpalParams(**{**fields, "mu": 0.1})
    with pytest.raises(ValueError):
        OpalParams(**{**fields, "epsilon": 20.0})


def test_eval_options_defaults() -> None:
    """Test evaluation defaults."""
    options = EvalOptions()
    assert not options.align
    assert options.tol == 1e-10
    assert options.max_iter == 100
    assert options.bins == BinSpec.default()
    with pytest.raises(ValueError):
        EvalOptions(tol=0.0)
