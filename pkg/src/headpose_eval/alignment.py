"""Reference-frame alignment between prediction and annotation conventions.

Predictions are modelled as R̂ᵢ·δRᵢ·Δ = Rᵢ: a per-sample error δRᵢ around the
identity and a misalignment Δ shared by the whole set. The residuals
δᵢ = R̂ᵢᵀRᵢ scatter around Δ, so Δ is estimated as their Karcher mean and
removed by right-multiplying each prediction with the estimate.
"""
import logging
from collections.abc import Sequence
from typing import Optional

import numpy as np

from .errors import (
    ConvergenceError,
    EmptyInputError,
    IllConditionedInputError,
    InvalidArgumentError,
)
from .metrics import geodesic_angles
from .models import AlignmentResult, KarcherSummary, RotationMatrix
from .so3 import exp_map_batch, log_map_batch

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 100
DISPERSION_WARNING_DEG = 90.0
DISPERSION_LIMIT_DEG = 150.0
DISPERSION_SUBSAMPLE = 64


def _stack(rotations: Sequence[RotationMatrix]) -> np.ndarray:
    if len(rotations) == 0:
        raise EmptyInputError("at least one rotation is required")
    return np.stack([r.m for r in rotations])


def _paired_stacks(
    predictions: Sequence[RotationMatrix], ground_truth: Sequence[RotationMatrix]
) -> tuple[np.ndarray, np.ndarray]:
    if len(predictions) != len(ground_truth):
        raise InvalidArgumentError(
            f"{len(predictions)} predictions but {len(ground_truth)} ground-truth rotations"
        )
    if len(predictions) == 0:
        raise InvalidArgumentError("predictions and ground truth must not be empty")
    return _stack(predictions), _stack(ground_truth)


def residuals(
    predictions: Sequence[RotationMatrix], ground_truth: Sequence[RotationMatrix]
) -> list[RotationMatrix]:
    """Per-sample residuals δᵢ = R̂ᵢᵀRᵢ.

    Raises:
        InvalidArgumentError: If the sequences differ in length or are empty
    """
    pred, gt = _paired_stacks(predictions, ground_truth)
    return [RotationMatrix(m=d) for d in np.swapaxes(pred, -1, -2) @ gt]


def max_dispersion(stack: np.ndarray) -> float:
    """Largest pairwise geodesic distance (degrees) within a fixed-seed subsample."""
    n = stack.shape[0]
    if n > DISPERSION_SUBSAMPLE:
        picked = np.sort(np.random.default_rng(0).choice(n, DISPERSION_SUBSAMPLE, replace=False))
        stack = stack[picked]
    pairwise = geodesic_angles(stack[:, None], stack[None, :])
    return float(np.degrees(pairwise.max()))


def _check_dispersion(stack: np.ndarray) -> None:
    spread = max_dispersion(stack)
    if spread > DISPERSION_LIMIT_DEG:
        raise IllConditionedInputError(
            f"rotations spread over {spread:.1f} deg (limit {DISPERSION_LIMIT_DEG:.0f}); "
            "their Karcher mean is not well defined"
        )
    if spread > DISPERSION_WARNING_DEG:
        logger.warning(f"Rotations spread over {spread:.1f} deg; Karcher mean may be unreliable")


def _objective(mean: np.ndarray, stack: np.ndarray) -> float:
    return float(np.sum(geodesic_angles(mean, stack) ** 2))


def _karcher(stack: np.ndarray, tol: float, max_iter: int) -> KarcherSummary:
    if tol <= 0.0 or max_iter < 1:
        raise InvalidArgumentError(f"need tol > 0 and max_iter >= 1, got {tol}, {max_iter}")
    _check_dispersion(stack)

    mean = stack[0].copy()
    history = [_objective(mean, stack)]
    step_norm = float("inf")
    for iteration in range(1, max_iter + 1):
        step = np.mean(log_map_batch(mean.T @ stack), axis=0)
        step_norm = float(np.linalg.norm(step))
        logger.debug(f"Karcher iteration {iteration}: step {step_norm:.3e} rad, "
                     f"objective {history[-1]:.6e}")
        if step_norm < tol:
            return KarcherSummary(
                mean=RotationMatrix(m=mean),
                iterations=iteration,
                final_step_norm=step_norm,
                objective_history=history,
            )
        mean = mean @ exp_map_batch(step[None])[0]
        objective = _objective(mean, stack)
        if objective > history[-1] * (1.0 + 1e-12) + 1e-18:
            logger.warning(
                f"Karcher objective increased at iteration {iteration}: "
                f"{history[-1]:.6e} -> {objective:.6e}"
            )
        history.append(objective)

    raise ConvergenceError(
        f"Karcher mean did not converge in {max_iter} iterations (last step {step_norm:.3e} rad)",
        last_iterate=RotationMatrix(m=mean),
        iterations=max_iter,
        step_norm=step_norm,
    )


def karcher_summary(
    rotations: Sequence[RotationMatrix],
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> KarcherSummary:
    """Karcher mean with its iteration record.

    Starting from the first rotation M, repeat r = mean(log(Mᵀδᵢ)),
    M ← M·exp(r) until |r| < tol.

    Raises:
        EmptyInputError: If no rotations are given
        IllConditionedInputError: If the rotations spread over more than 150°
        ConvergenceError: If |r| stays above tol for max_iter iterations
    """
    return _karcher(_stack(rotations), tol, max_iter)


def karcher_mean(
    rotations: Sequence[RotationMatrix],
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> RotationMatrix:
    """Rotation minimizing the sum of squared geodesic distances to the inputs."""
    return karcher_summary(rotations, tol, max_iter).mean


def _align_stacks(
    pred: np.ndarray, gt: np.ndarray, tol: float, max_iter: int, transpose: bool
) -> tuple[np.ndarray, AlignmentResult]:
    summary = _karcher(np.swapaxes(pred, -1, -2) @ gt, tol, max_iter)
    delta = summary.mean.m
    aligned = pred @ (delta.T if transpose else delta)
    result = AlignmentResult(
        delta_hat=summary.mean,
        iterations=summary.iterations,
        final_step_norm=summary.final_step_norm,
        ge_before=float(np.degrees(np.mean(geodesic_angles(pred, gt)))),
        ge_after=float(np.degrees(np.mean(geodesic_angles(aligned, gt)))),
        transposed=transpose,
    )
    logger.info(
        f"Alignment of {pred.shape[0]} samples: |delta| "
        f"{np.degrees(np.linalg.norm(log_map_batch(delta[None])[0])):.3f} deg, "
        f"GE {result.ge_before:.4f} -> {result.ge_after:.4f} deg in {result.iterations} iterations"
    )
    return aligned, result


def align(
    predictions: Sequence[RotationMatrix],
    ground_truth: Sequence[RotationMatrix],
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    transpose: bool = False,
) -> tuple[list[RotationMatrix], AlignmentResult]:
    """Estimate the shared misalignment and apply it to the predictions.

    Args:
        predictions: Estimated rotations R̂ᵢ
        ground_truth: Annotated rotations Rᵢ
        tol: Karcher step tolerance in radians
        max_iter: Karcher iteration limit
        transpose: Apply Δ̂ᵀ instead of Δ̂

    Returns:
        Aligned predictions R̂ᵢΔ̂ (or R̂ᵢΔ̂ᵀ) and the alignment summary
    """
    pred, gt = _paired_stacks(predictions, ground_truth)
    aligned, result = _align_stacks(pred, gt, tol, max_iter, transpose)
    return [RotationMatrix(m=a) for a in aligned], result


def align_groups(
    predictions: Sequence[RotationMatrix],
    ground_truth: Sequence[RotationMatrix],
    groups: Sequence[Optional[str]],
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    transpose: bool = False,
) -> tuple[list[RotationMatrix], dict[Optional[str], AlignmentResult]]:
    """Align each group (e.g. video sequence) with its own Δ̂.

    Returns:
        Aligned predictions in input order and one result per group, in order of
        first appearance
    """
    pred, gt = _paired_stacks(predictions, ground_truth)
    if len(groups) != pred.shape[0]:
        raise InvalidArgumentError(f"{len(groups)} group keys for {pred.shape[0]} samples")

    aligned = np.empty_like(pred)
    results: dict[Optional[str], AlignmentResult] = {}
    for key in dict.fromkeys(groups):
        members = np.array([g == key for g in groups])
        aligned[members], results[key] = _align_stacks(
            pred[members], gt[members], tol, max_iter, transpose
        )
    return [RotationMatrix(m=a) for a in aligned], results
