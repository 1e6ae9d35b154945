"""Data plumbing for evaluation runs.

Pose files are CSV or JSON Lines with one sample per row: ``id``, an optional
``group`` (video or sequence key) and the columns of one representation:

    euler_deg        pitch, yaw, roll
    quaternion_wxyz  qw, qx, qy, qz
    matrix_rowmajor  m00, m01, ..., m22
    sixd             c1x, c1y, c1z, c2x, c2y, c2z

Ground truth and predictions live in separate files joined by ``id``.
"""
import hashlib
import json
import logging
import math
from collections import Counter
from collections.abc import Sequence
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np
import pandas as pd

from . import __version__
from .alignment import align, align_groups
from .errors import (
    ConvergenceError,
    EmptyInputError,
    InputFileError,
    InvalidArgumentError,
    ReportWriteError,
)
from .metrics import angle_errors, euler_errors, g_geodesic_many
from .models import (
    AlignmentEntry,
    AlignmentResult,
    BinSpec,
    EulerAnglesPYR,
    EvalBlock,
    EvalOptions,
    EvalReport,
    FileFormat,
    MetricsBlock,
    OpalParams,
    Provenance,
    ReportFormat,
    Representation,
    RotationMatrix,
    SampleRecord,
    SixD,
    UnitQuaternion,
)
from .opal import g_opal
from .so3 import (
    AngleRange,
    RotationSampler,
    SeedLike,
    as_rotation,
    euler_decompose,
    euler_decompose_wide,
    euler_matrices,
    euler_to_rotation,
    exp_map_batch,
    log_map_batch,
    quat_to_rotation,
    rotation_to_euler,
    rotation_to_quat,
    sixd_to_rotation,
)

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

REPRESENTATION_COLUMNS: dict[Representation, tuple[str, ...]] = {
    Representation.EULER_DEG: ("pitch", "yaw", "roll"),
    Representation.QUATERNION_WXYZ: ("qw", "qx", "qy", "qz"),
    Representation.MATRIX_ROWMAJOR: tuple(f"m{i}{j}" for i in range(3) for j in range(3)),
    Representation.SIXD: ("c1x", "c1y", "c1z", "c2x", "c2y", "c2z"),
}

# Matrices this close to SO(3) are projected onto it; anything further is a row error.
MATRIX_PROJECTION_TOLERANCE = 1e-6
NEAR_GIMBAL_YAW = 89.0
REPORT_SIGNIFICANT_DIGITS = 6

# Synthetic benchmark yaw intervals; pitch and roll stay within ±45°.
YAW_INTERVALS: tuple[AngleRange, ...] = (
    (-30.0, 30.0),
    (-60.0, 60.0),
    (-90.0, 90.0),
    (-120.0, 120.0),
    (-150.0, 150.0),
    (-180.0, 180.0),
)
SYNTH_PITCH_RANGE: AngleRange = (-45.0, 45.0)
SYNTH_ROLL_RANGE: AngleRange = (-45.0, 45.0)


def infer_format(path: PathLike, fmt: Optional[FileFormat] = None) -> FileFormat:
    """Return fmt, or the format implied by the file extension."""
    if fmt is not None:
        return FileFormat(fmt)
    suffix = Path(path).suffix.lower()
    if suffix == ".csv":
        return FileFormat.CSV
    if suffix in (".jsonl", ".ndjson"):
        return FileFormat.JSONL
    raise InvalidArgumentError(f"cannot infer file format of {path}; use .csv or .jsonl")


def pose_from_values(values: np.ndarray, representation: Representation) -> RotationMatrix:
    """Convert one row of representation columns to a rotation matrix."""
    v = [float(x) for x in values]
    if representation == Representation.EULER_DEG:
        return euler_to_rotation(EulerAnglesPYR(pitch=v[0], yaw=v[1], roll=v[2]))
    if representation == Representation.QUATERNION_WXYZ:
        return quat_to_rotation(UnitQuaternion(w=v[0], x=v[1], y=v[2], z=v[3]))
    if representation == Representation.MATRIX_ROWMAJOR:
        return as_rotation(np.reshape(v, (3, 3)), tolerance=MATRIX_PROJECTION_TOLERANCE)
    return sixd_to_rotation(SixD(c1=tuple(v[:3]), c2=tuple(v[3:])))


def pose_values(R: RotationMatrix, representation: Representation) -> np.ndarray:
    """Representation columns of a rotation, in file column order."""
    if representation == Representation.EULER_DEG:
        return rotation_to_euler(R).as_array()
    if representation == Representation.QUATERNION_WXYZ:
        return rotation_to_quat(R).as_array()
    if representation == Representation.MATRIX_ROWMAJOR:
        return R.m.ravel().copy()
    return np.concatenate([R.m[:, 0], R.m[:, 1]])


def _is_missing(value: Any) -> bool:
    if value is None:
        return True
    if isinstance(value, float) and math.isnan(value):
        return True
    return isinstance(value, str) and value.strip() == ""


def _locate_bad_json_line(path: Path) -> Optional[int]:
    for number, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            json.loads(line)
        except json.JSONDecodeError:
            return number
    return None


def _read_table(path: Path, fmt: FileFormat) -> tuple[pd.DataFrame, int]:
    """Read a pose file; returns the frame and the file line of its first row."""
    try:
        if fmt == FileFormat.CSV:
            try:
                df = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
            except pd.errors.EmptyDataError as e:
                raise EmptyInputError(f"{path}: file is empty") from e
            except pd.errors.ParserError as e:
                raise InputFileError(f"malformed CSV: {e}", path=str(path)) from e
            first_line = 2
        else:
            if not path.read_text(encoding="utf-8").strip():
                raise EmptyInputError(f"{path}: file is empty")
            try:
                df = pd.read_json(path, lines=True, dtype=False)
            except ValueError as e:
                raise InputFileError(
                    f"malformed JSON Lines: {e}", path=str(path), line=_locate_bad_json_line(path)
                ) from e
            first_line = 1
    except FileNotFoundError as e:
        raise InputFileError("file not found", path=str(path)) from e

    if len(df) == 0:
        raise EmptyInputError(f"{path}: no samples")
    df.columns = [str(c).strip().lower() for c in df.columns]
    return df, first_line


def read_poses(
    path: PathLike,
    representation: Representation,
    fmt: Optional[FileFormat] = None,
) -> list[tuple[str, Optional[str], RotationMatrix]]:
    """Parse a pose file into (id, group, rotation) rows.

    Raises:
        EmptyInputError: If the file holds no samples
        InputFileError: On malformed files, missing columns, non-finite or invalid
            poses and duplicate ids
    """
    path = Path(path)
    representation = Representation(representation)
    df, first_line = _read_table(path, infer_format(path, fmt))

    columns = REPRESENTATION_COLUMNS[representation]
    missing = [c for c in ("id", *columns) if c not in df.columns]
    if missing:
        raise InputFileError(
            f"missing columns {missing} for representation {representation.value}", path=str(path)
        )

    rows: list[tuple[str, Optional[str], RotationMatrix]] = []
    seen: set[str] = set()
    has_group = "group" in df.columns
    for index, record in enumerate(df.to_dict("records")):
        line = first_line + index
        if _is_missing(record["id"]):
            raise InputFileError("empty id", path=str(path), line=line)
        sample_id = str(record["id"]).strip()
        if sample_id in seen:
            raise InputFileError("duplicate id", path=str(path), line=line, row_id=sample_id)
        seen.add(sample_id)

        try:
            values = np.array([float(record[c]) for c in columns])
        except (TypeError, ValueError) as e:
            raise InputFileError(f"non-numeric pose value: {e}", path=str(path), line=line,
                                 row_id=sample_id) from e
        if not np.all(np.isfinite(values)):
            raise InputFileError("non-finite pose value", path=str(path), line=line,
                                 row_id=sample_id)
        try:
            rotation = pose_from_values(values, representation)
        except ValueError as e:
            raise InputFileError(str(e), path=str(path), line=line, row_id=sample_id) from e

        group = record.get("group") if has_group else None
        rows.append((sample_id, None if _is_missing(group) else str(group).strip(), rotation))

    logger.info(f"Loaded {len(rows)} {representation.value} poses from {path}")
    return rows


def load_samples(
    path: PathLike,
    fmt: Optional[FileFormat] = None,
    representation: Representation = Representation.EULER_DEG,
    pred_path: Optional[PathLike] = None,
    pred_representation: Optional[Representation] = None,
    pred_fmt: Optional[FileFormat] = None,
) -> list[SampleRecord]:
    """Load ground truth and, optionally, predictions joined by id.

    Args:
        path: Ground-truth pose file
        fmt: File format; inferred from the extension when None
        representation: Pose columns of the ground-truth file
        pred_path: Prediction pose file
        pred_representation: Pose columns of the prediction file (defaults to representation)
        pred_fmt: Format of the prediction file; inferred when None

    Returns:
        One record per ground-truth row, in file order
    """
    ground_truth = read_poses(path, representation, fmt)
    predictions: dict[str, tuple[Optional[str], RotationMatrix]] = {}
    if pred_path is not None:
        known = {sample_id for sample_id, _, _ in ground_truth}
        for sample_id, group, rotation in read_poses(
            pred_path, pred_representation or representation, pred_fmt
        ):
            if sample_id not in known:
                raise InputFileError("prediction for unknown id", path=str(pred_path),
                                     row_id=sample_id)
            predictions[sample_id] = (group, rotation)

    records = []
    for sample_id, group, rotation in ground_truth:
        pred_group, prediction = predictions.get(sample_id, (None, None))
        records.append(
            SampleRecord(
                id=sample_id,
                group=group if group is not None else pred_group,
                ground_truth=rotation,
                prediction=prediction,
            )
        )
    if pred_path is not None and len(predictions) < len(records):
        logger.warning(f"{len(records) - len(predictions)} samples have no prediction")
    return records


def save_samples(
    samples: Sequence[SampleRecord],
    path: PathLike,
    fmt: Optional[FileFormat] = None,
    representation: Representation = Representation.EULER_DEG,
    which: str = "ground_truth",
) -> None:
    """Write one pose slot ("ground_truth" or "prediction") of the samples.

    Raises:
        InvalidArgumentError: If a sample lacks the requested pose
        ReportWriteError: If the file cannot be written
    """
    if which not in ("ground_truth", "prediction"):
        raise InvalidArgumentError(f"which must be 'ground_truth' or 'prediction', got {which!r}")
    path = Path(path)
    fmt = infer_format(path, fmt)
    representation = Representation(representation)
    columns = REPRESENTATION_COLUMNS[representation]

    rows = []
    for sample in samples:
        rotation = getattr(sample, which)
        if rotation is None:
            raise InvalidArgumentError(f"sample {sample.id!r} has no {which}")
        rows.append(
            {"id": sample.id, "group": sample.group,
             **dict(zip(columns, pose_values(rotation, representation)))}
        )
    df = pd.DataFrame(rows, columns=["id", "group", *columns])

    try:
        if fmt == FileFormat.CSV:
            df.to_csv(path, index=False, float_format="%.17g")
        else:
            df.to_json(path, orient="records", lines=True, double_precision=15)
    except OSError as e:
        raise ReportWriteError(str(path), e) from e
    logger.info(f"Wrote {len(rows)} {representation.value} poses to {path}")


def _wide_angles(samples: Sequence[SampleRecord]) -> np.ndarray:
    return euler_decompose_wide(np.stack([s.ground_truth.m for s in samples]))


def filter_by_yaw(
    samples: Sequence[SampleRecord],
    min_deg: float,
    max_deg: float,
    tri_angle: bool = False,
) -> list[SampleRecord]:
    """Keep samples whose ground-truth yaw lies in [min_deg, max_deg].

    Angles come from the wide-range decomposition so that yaw covers the full
    circle. With tri_angle the bound applies to pitch and roll as well.
    """
    if not min_deg <= max_deg:
        raise InvalidArgumentError(f"empty yaw filter [{min_deg}, {max_deg}]")
    if len(samples) == 0:
        return []

    angles = _wide_angles(samples)
    inside = (angles >= min_deg) & (angles <= max_deg)
    keep = inside.all(axis=1) if tri_angle else inside[:, 1]
    kept = [s for s, k in zip(samples, keep) if k]
    logger.info(
        f"{'Pitch/yaw/roll' if tri_angle else 'Yaw'} filter [{min_deg}, {max_deg}] kept "
        f"{len(kept)} of {len(samples)} samples (dropped {len(samples) - len(kept)})"
    )
    return kept


def bin_by_yaw(samples: Sequence[SampleRecord], spec: BinSpec) -> dict[str, list[SampleRecord]]:
    """Group samples by |yaw| of the ground truth; every bin appears, possibly empty."""
    binned: dict[str, list[SampleRecord]] = {b.name: [] for b in spec.bins}
    if len(samples) == 0:
        return binned
    for sample, abs_yaw in zip(samples, np.abs(_wide_angles(samples)[:, 1])):
        name = spec.assign(float(abs_yaw))
        if name is None:
            logger.debug(f"Sample {sample.id} with |yaw| {abs_yaw:.3f} falls outside every bin")
            continue
        binned[name].append(sample)
    return binned


def metrics_block(
    pred: np.ndarray, gt: np.ndarray, opal_params: Optional[OpalParams] = None
) -> MetricsBlock:
    """All set-level metrics over matching (N, 3, 3) stacks."""
    count = int(pred.shape[0])
    if count == 0:
        return MetricsBlock(count=0)
    ge = g_geodesic_many(pred, gt)
    wrapped = euler_errors(pred, gt, wrapped=True)
    return MetricsBlock(
        count=count,
        ge=float(np.mean(ge)),
        mae_raw=angle_errors(euler_errors(pred, gt, wrapped=False)),
        mae_wrapped=angle_errors(wrapped),
        euc=float(np.mean(np.sum(wrapped, axis=1))),
        chordal=float(np.mean(np.linalg.norm(gt - pred, axis=(-2, -1)))),
        opal=float(np.mean(g_opal(ge, opal_params))) if opal_params is not None else None,
    )


def _eval_block(
    samples: Sequence[SampleRecord],
    pred: np.ndarray,
    gt: np.ndarray,
    options: EvalOptions,
) -> EvalBlock:
    index = {s.id: i for i, s in enumerate(samples)}
    bins = {}
    for name, members in bin_by_yaw(samples, options.bins).items():
        rows = [index[s.id] for s in members]
        bins[name] = metrics_block(pred[rows], gt[rows], options.opal_params)
    return EvalBlock(overall=metrics_block(pred, gt, options.opal_params), bins=bins)


def alignment_entry(group: Optional[str], count: int, result: AlignmentResult) -> AlignmentEntry:
    delta = result.delta_hat
    return AlignmentEntry(
        group=group,
        count=count,
        delta_matrix=delta.as_rows(),
        delta_euler=rotation_to_euler(delta),
        delta_angle=float(np.degrees(np.linalg.norm(log_map_batch(delta.m[None])[0]))),
        iterations=result.iterations,
        final_step_norm=result.final_step_norm,
        ge_before=result.ge_before,
        ge_after=result.ge_after,
    )


def near_gimbal_ids(samples: Sequence[SampleRecord]) -> list[str]:
    """Ids whose ground truth or prediction has principal |yaw| ≥ 89°."""
    if len(samples) == 0:
        return []
    yaw_gt = euler_decompose(np.stack([s.ground_truth.m for s in samples]))[:, 1]
    flagged = np.abs(yaw_gt) >= NEAR_GIMBAL_YAW
    with_pred = [i for i, s in enumerate(samples) if s.prediction is not None]
    if with_pred:
        yaw_pred = euler_decompose(np.stack([samples[i].prediction.m for i in with_pred]))[:, 1]
        flagged[with_pred] |= np.abs(yaw_pred) >= NEAR_GIMBAL_YAW
    return [s.id for s, f in zip(samples, flagged) if f]


def evaluate(
    samples: Sequence[SampleRecord],
    options: Optional[EvalOptions] = None,
    input_digests: Optional[dict[str, str]] = None,
) -> EvalReport:
    """Compute the metric report, before and optionally after alignment.

    A Karcher mean that fails to converge does not abort the run: the report
    keeps its unaligned block, ``aligned`` stays None and a note records the
    failure.

    Raises:
        EmptyInputError: If there are no samples (or none survive the yaw filter)
        InvalidArgumentError: If a sample has no prediction
    """
    options = options or EvalOptions()
    if len(samples) == 0:
        raise EmptyInputError("no samples to evaluate")
    missing = [s.id for s in samples if s.prediction is None]
    if missing:
        shown = ", ".join(missing[:5]) + (", ..." if len(missing) > 5 else "")
        raise InvalidArgumentError(f"{len(missing)} samples have no prediction: {shown}")

    if options.yaw_filter is not None:
        samples = filter_by_yaw(samples, *options.yaw_filter, tri_angle=options.tri_angle_filter)
        if not samples:
            raise EmptyInputError(f"no samples left after yaw filter {options.yaw_filter}")

    pred = np.stack([s.prediction.m for s in samples])
    gt = np.stack([s.ground_truth.m for s in samples])
    notes: list[str] = []
    gimbal = near_gimbal_ids(samples)
    if gimbal:
        logger.warning(f"{len(gimbal)} samples lie within 1 deg of gimbal lock; "
                       "their Euler errors are unreliable")

    aligned_block: Optional[EvalBlock] = None
    entries: list[AlignmentEntry] = []
    if options.align or options.group_align:
        predictions = [s.prediction for s in samples]
        ground_truth = [s.ground_truth for s in samples]
        try:
            if options.group_align:
                aligned, results = align_groups(
                    predictions, ground_truth, [s.group for s in samples],
                    options.tol, options.max_iter, options.transpose_alignment,
                )
            else:
                aligned, result = align(
                    predictions, ground_truth, options.tol, options.max_iter,
                    options.transpose_alignment,
                )
                results = {None: result}
        except ConvergenceError as e:
            logger.error(f"Alignment failed: {e}")
            notes.append(f"alignment failed: {e}")
        else:
            counts = Counter(s.group if options.group_align else None for s in samples)
            entries = [alignment_entry(key, counts[key], res) for key, res in results.items()]
            aligned_block = _eval_block(samples, np.stack([a.m for a in aligned]), gt, options)

    return EvalReport(
        unaligned=_eval_block(samples, pred, gt, options),
        aligned=aligned_block,
        alignment=entries,
        near_gimbal_ids=gimbal,
        notes=notes,
        provenance=Provenance(
            tool_version=__version__,
            input_digests=dict(input_digests or {}),
            parameters=options.model_dump(mode="json"),
        ),
    )


def _round_floats(value: Any, digits: int = REPORT_SIGNIFICANT_DIGITS) -> Any:
    if isinstance(value, float):
        return float(f"{value:.{digits}g}")
    if isinstance(value, dict):
        return {k: _round_floats(v, digits) for k, v in value.items()}
    if isinstance(value, list):
        return [_round_floats(v, digits) for v in value]
    return value


def summary_frame(report: EvalReport) -> pd.DataFrame:
    """One row per bin plus one overall row for each metric block."""
    rows = []
    blocks = [("unaligned", report.unaligned)]
    if report.aligned is not None:
        blocks.append(("aligned", report.aligned))
    for block_name, block in blocks:
        for scope, metrics in [("overall", block.overall), *block.bins.items()]:
            row: dict[str, Any] = {"block": block_name, "scope": scope, "count": metrics.count,
                                   "ge": metrics.ge}
            for kind in ("mae_raw", "mae_wrapped"):
                errors = getattr(metrics, kind)
                for angle in ("yaw", "pitch", "roll", "mean"):
                    row[f"{kind}_{angle}"] = getattr(errors, angle) if errors else None
            row.update(euc=metrics.euc, chordal=metrics.chordal, opal=metrics.opal)
            rows.append(row)
    return pd.DataFrame(rows)


def render_report(report: EvalReport, fmt: ReportFormat = ReportFormat.JSON) -> str:
    """Serialize a report with numbers rounded to six significant digits."""
    if ReportFormat(fmt) == ReportFormat.JSON:
        return json.dumps(_round_floats(report.model_dump(mode="json")), indent=2) + "\n"
    return summary_frame(report).to_csv(index=False, float_format="%.6g", lineterminator="\n")


def write_report(report: EvalReport, path: PathLike, fmt: ReportFormat = ReportFormat.JSON) -> None:
    """Write a rendered report.

    Raises:
        ReportWriteError: If the file cannot be written
    """
    try:
        Path(path).write_text(render_report(report, fmt), encoding="utf-8")
    except OSError as e:
        raise ReportWriteError(str(path), e) from e
    logger.info(f"Wrote {ReportFormat(fmt).value} report to {path}")


def file_digest(path: PathLike) -> str:
    """SHA-256 of a file's bytes, as ``sha256:<hex>``."""
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return f"sha256:{digest.hexdigest()}"


def synth_samples(
    n: int,
    yaw_range: AngleRange = (-90.0, 90.0),
    pitch_range: AngleRange = SYNTH_PITCH_RANGE,
    roll_range: AngleRange = SYNTH_ROLL_RANGE,
    noise_deg: float = 0.0,
    misalignment: Optional[EulerAnglesPYR] = None,
    seed: SeedLike = None,
    n_groups: Optional[int] = None,
) -> list[SampleRecord]:
    """Synthetic ground truth with predictions following R̂ᵢ·δRᵢ·Δ = Rᵢ.

    Ground-truth Euler angles are uniform in the given ranges. δRᵢ is the
    exponential of a tangent vector with i.i.d. normal components of standard
    deviation noise_deg/√3, so the RMS perturbation angle is noise_deg.

    Args:
        n: Number of samples
        yaw_range: Yaw interval in degrees
        pitch_range: Pitch interval in degrees
        roll_range: Roll interval in degrees
        noise_deg: RMS prediction noise in degrees
        misalignment: Shared reference-frame offset Δ; identity when None
        seed: Seed of every random draw
        n_groups: Assign samples round-robin to groups seq0, seq1, ...
    """
    if n < 1:
        raise InvalidArgumentError(f"sample count must be positive, got {n}")
    if not (math.isfinite(noise_deg) and noise_deg >= 0.0):
        raise InvalidArgumentError(f"noise must be a non-negative angle, got {noise_deg}")
    if n_groups is not None and n_groups < 1:
        raise InvalidArgumentError(f"group count must be positive, got {n_groups}")

    sampler = RotationSampler(seed)
    gt = euler_matrices(sampler.sample_angles(n, yaw_range, pitch_range, roll_range))
    noise = sampler.rng.normal(0.0, np.deg2rad(noise_deg) / np.sqrt(3.0), size=(n, 3))
    delta = euler_to_rotation(misalignment).m if misalignment is not None else np.eye(3)
    pred = gt @ delta.T @ np.swapaxes(exp_map_batch(noise), -1, -2)

    return [
        SampleRecord(
            id=f"{i:06d}",
            group=f"seq{i % n_groups}" if n_groups else None,
            ground_truth=RotationMatrix(m=gt[i]),
            prediction=RotationMatrix(m=pred[i]),
        )
        for i in range(n)
    ]


def synth_generate(
    n: int,
    yaw_range: AngleRange,
    pitch_range: AngleRange,
    roll_range: AngleRange,
    noise_deg: float,
    misalignment: Optional[EulerAnglesPYR],
    seed: SeedLike,
    gt_path: PathLike,
    pred_path: PathLike,
    fmt: Optional[FileFormat] = None,
    representation: Representation = Representation.EULER_DEG,
    n_groups: Optional[int] = None,
) -> tuple[Path, Path]:
    """Generate a synthetic set and write ground-truth and prediction files."""
    samples = synth_samples(
        n, yaw_range, pitch_range, roll_range, noise_deg, misalignment, seed, n_groups
    )
    save_samples(samples, gt_path, fmt, representation, which="ground_truth")
    save_samples(samples, pred_path, fmt, representation, which="prediction")
    return Path(gt_path), Path(pred_path)


def _sweep_yaws(step_deg: float) -> np.ndarray:
    if not 0.0 < step_deg <= 180.0:
        raise InvalidArgumentError(f"sweep step must be in (0, 180], got {step_deg}")
    return np.arange(0.0, 360.0 + step_deg / 2.0, step_deg)


def representation_sweep(
    step_deg: float = 1.0,
    representation: Representation = Representation.QUATERNION_WXYZ,
) -> pd.DataFrame:
    """Components of a representation along a pure-yaw sweep from 0° to 360°.

    Euler angles use the wide-range branch, so yaw wraps at 180°; quaternions
    are canonical (w ≥ 0).
    """
    representation = Representation(representation)
    yaws = _sweep_yaws(step_deg)
    angles = np.stack([np.zeros_like(yaws), yaws, np.zeros_like(yaws)], axis=-1)
    matrices = euler_matrices(angles)
    if representation == Representation.EULER_DEG:
        values = euler_decompose_wide(matrices)
    else:
        values = np.stack([pose_values(RotationMatrix(m=m), representation) for m in matrices])
    table = pd.DataFrame(values, columns=list(REPRESENTATION_COLUMNS[representation]))
    table.insert(0, "sweep_yaw", yaws)
    return table


def quat_sweep(step_deg: float = 1.0) -> pd.DataFrame:
    """Canonical quaternion (yaw, w, x, y, z) along a pure-yaw sweep."""
    table = representation_sweep(step_deg, Representation.QUATERNION_WXYZ)
    return table.rename(columns={"sweep_yaw": "yaw", "qw": "w", "qx": "x", "qy": "y", "qz": "z"})


def find_discontinuities(table: pd.DataFrame, threshold: float = 1.0) -> list[float]:
    """Yaw midpoints between adjacent sweep rows where any component jumps by more than threshold.

    The threshold is in the table's units: 1.0 suits quaternion, matrix and 6D
    components; Euler sweeps are in degrees and need something like 90.
    """
    yaw_column = "sweep_yaw" if "sweep_yaw" in table.columns else "yaw"
    yaws = table[yaw_column].to_numpy()
    values = table.drop(columns=[yaw_column]).to_numpy(dtype=float)
    jumps = np.abs(np.diff(values, axis=0)).max(axis=1)
    return [float((yaws[i] + yaws[i + 1]) / 2.0) for i in np.flatnonzero(jumps > threshold)]
