import logging
import math
from collections.abc import Sequence
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd

from .errors import EmptyInputError, FitInfeasibleError, InputFileError, InvalidArgumentError
from .metrics import RotationPair, g_geodesic_many, stack_pairs
from .models import OpalParams

logger = logging.getLogger(__name__)

DEFAULT_EPSILON = 2.0
DEFAULT_BETA = 12.0
DEFAULT_PEAK = 5.5
DEFAULT_SIGMA = 0.3
HISTOGRAM_BIN_WIDTH = 0.5
# upper bound on σ·(β − peak) in fits; cosh² of it sets the influence peak height
MAX_FIT_TANH_ARGUMENT = 20.0

# sech²(x) = 1/2 at x = ±acosh(√2)
_HALF_MAX_ARGUMENT = math.acosh(math.sqrt(2.0))
_PARAM_KEYS = ("epsilon", "beta", "mu", "sigma", "a", "b", "c", "d")

ArrayOrFloat = Union[float, np.ndarray]


def _tanh_sum(x: ArrayOrFloat, mu: float) -> np.ndarray:
    """tanh(x) + tanh(μ) without cancellation when both terms approach ±1."""
    x = np.asarray(x, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        stable = np.sinh(x + mu) / (np.cosh(x) * np.cosh(mu))
    return np.where(np.isfinite(stable), stable, np.tanh(x) + np.tanh(mu))


def _sech2(x: ArrayOrFloat) -> np.ndarray:
    with np.errstate(over="ignore"):
        return 1.0 / np.cosh(np.asarray(x, dtype=float)) ** 2


def _scalar_or_array(values: np.ndarray) -> ArrayOrFloat:
    return float(values) if np.ndim(values) == 0 else values


def derive_constants(epsilon: float, beta: float, mu: float, sigma: float) -> OpalParams:
    """Solve for the constants that make the Opal loss C¹ with unit slope beyond β.

    Args:
        epsilon: Quadratic/tanh threshold in degrees
        beta: tanh/linear threshold in degrees
        mu: tanh offset; the influence peaks at G = μ/σ
        sigma: tanh scale per degree

    Returns:
        Parameters with c = cosh²(σβ−μ)/σ, a = cσ·sech²(σε−μ)/(2ε),
        b = c·(tanh(σε−μ) + tanh μ) − aε², d = c·(tanh(σβ−μ) + tanh μ) − β

    Raises:
        InvalidArgumentError: If the thresholds or the peak are out of order
    """
    values = (epsilon, beta, mu, sigma)
    if not all(math.isfinite(v) for v in values):
        raise InvalidArgumentError(f"Opal parameters must be finite, got {values}")
    if not 0.0 < epsilon < beta <= 180.0:
        raise InvalidArgumentError(f"need 0 < epsilon < beta <= 180, got {epsilon}, {beta}")
    if sigma <= 0.0:
        raise InvalidArgumentError(f"sigma must be positive, got {sigma}")
    if not epsilon < mu / sigma < beta:
        raise InvalidArgumentError(
            f"influence peak mu/sigma = {mu / sigma:.6g} must lie inside ({epsilon}, {beta})"
        )

    left = sigma * epsilon - mu
    right = sigma * beta - mu
    with np.errstate(over="ignore"):
        cosh2_right = float(np.cosh(right) ** 2)
    if not math.isfinite(cosh2_right):
        raise InvalidArgumentError(f"sigma*beta - mu = {right:.6g} is too large to represent")

    c = cosh2_right / sigma
    a = c * sigma * float(_sech2(left)) / (2.0 * epsilon)
    b = c * float(_tanh_sum(left, mu)) - a * epsilon**2
    d = c * float(_tanh_sum(right, mu)) - beta
    return OpalParams(epsilon=epsilon, beta=beta, mu=mu, sigma=sigma, a=a, b=b, c=c, d=d)


def params_from_peak(
    epsilon: float = DEFAULT_EPSILON,
    beta: float = DEFAULT_BETA,
    peak: float = DEFAULT_PEAK,
    sigma: float = DEFAULT_SIGMA,
) -> OpalParams:
    """Derive parameters from the influence peak location (degrees) instead of μ."""
    return derive_constants(epsilon, beta, sigma * peak, sigma)


def default_params() -> OpalParams:
    """ε = 2°, β = 12°, influence peak at 5.5°, σ = 0.3 per degree."""
    return params_from_peak()


def _check_errors(G: ArrayOrFloat) -> np.ndarray:
    g = np.asarray(G, dtype=float)
    if not np.all(np.isfinite(g)):
        raise InvalidArgumentError("geodesic errors must be finite")
    if np.any(g < 0.0):
        raise InvalidArgumentError("geodesic errors must be non-negative")
    return g


def g_opal(G: ArrayOrFloat, params: OpalParams) -> ArrayOrFloat:
    """Opal loss of geodesic error(s) G in degrees.

    Quadratic below ε, shifted tanh on [ε, β), G + d from β on.
    """
    g = _check_errors(G)
    quadratic = params.a * g**2 + params.b
    shaped = params.c * _tanh_sum(params.sigma * g - params.mu, params.mu)
    linear = g + params.d
    values = np.where(g < params.epsilon, quadratic, np.where(g < params.beta, shaped, linear))
    return _scalar_or_array(values)


def opal_influence(G: ArrayOrFloat, params: OpalParams) -> ArrayOrFloat:
    """Derivative of g_opal with respect to G."""
    g = _check_errors(G)
    quadratic = 2.0 * params.a * g
    shaped = params.c * params.sigma * _sech2(params.sigma * g - params.mu)
    values = np.where(g < params.epsilon, quadratic, np.where(g < params.beta, shaped, 1.0))
    return _scalar_or_array(values)


def influence_peak(params: OpalParams) -> tuple[float, float]:
    """Location (degrees) and height of the influence maximum, cosh²(σβ−μ)."""
    return params.peak, params.c * params.sigma


def f_opal(pairs: Sequence[RotationPair], params: OpalParams) -> float:
    """Mean Opal loss of the geodesic errors over a set of (prediction, ground truth) pairs."""
    pred, gt = stack_pairs(pairs)
    return float(np.mean(g_opal(g_geodesic_many(pred, gt), params)))


def fit_params(
    error_samples: Sequence[float],
    epsilon: float = DEFAULT_EPSILON,
    beta: float = DEFAULT_BETA,
    bin_width: float = HISTOGRAM_BIN_WIDTH,
) -> OpalParams:
    """Shape the influence function to a distribution of geodesic errors.

    The peak sits at the mean of the samples in the most populated histogram
    bin (ties go to the smaller error) and σ makes the sech² full width at half
    maximum equal the width of the contiguous run of bins holding at least half
    the modal count. Only samples strictly inside (ε, β) are used. σ is capped
    so that σ·(β − peak) ≤ 20; narrower distributions get a wider influence
    peak instead of constants that overflow.

    Raises:
        EmptyInputError: If no samples are given
        FitInfeasibleError: If no sample lies inside (ε, β)
    """
    samples = np.asarray(error_samples, dtype=float).ravel()
    if samples.size == 0:
        raise EmptyInputError("at least one error sample is required")
    if not np.all(np.isfinite(samples)):
        raise InvalidArgumentError("error samples must be finite")
    if not 0.0 < epsilon < beta:
        raise InvalidArgumentError(f"need 0 < epsilon < beta, got {epsilon}, {beta}")

    inside = samples[(samples > epsilon) & (samples < beta)]
    if inside.size == 0:
        raise FitInfeasibleError(f"no error sample lies inside ({epsilon}, {beta})")

    bins = np.floor((inside - epsilon) / bin_width).astype(int)
    counts = np.bincount(bins)
    mode = int(np.argmax(counts))
    peak = float(np.mean(inside[bins == mode]))

    half = counts[mode] / 2.0
    left, right = mode, mode
    while left > 0 and counts[left - 1] >= half:
        left -= 1
    while right < counts.size - 1 and counts[right + 1] >= half:
        right += 1
    fwhm = (right - left + 1) * bin_width
    sigma = 2.0 * _HALF_MAX_ARGUMENT / fwhm
    limit = MAX_FIT_TANH_ARGUMENT / (beta - peak)
    if sigma > limit:
        logger.warning(
            f"Fitted FWHM {fwhm:.4g} deg is too narrow for beta = {beta:.4g}; "
            f"widening to {2.0 * _HALF_MAX_ARGUMENT / limit:.4g} deg"
        )
        sigma = limit
    logger.info(
        f"Fitted Opal influence: peak {peak:.4g} deg, FWHM {fwhm:.4g} deg "
        f"from {inside.size}/{samples.size} samples"
    )
    return derive_constants(epsilon, beta, sigma * peak, sigma)


def opal_curve(params: OpalParams, grid: Optional[np.ndarray] = None) -> pd.DataFrame:
    """Plot-ready table of the Opal and geodesic losses and their influence functions."""
    g = np.linspace(0.0, 180.0, 1801) if grid is None else np.asarray(grid, dtype=float)
    return pd.DataFrame(
        {
            "G": g,
            "opal_loss": g_opal(g, params),
            "opal_influence": opal_influence(g, params),
            "geodesic_loss": g,
            "geodesic_influence": np.ones_like(g),
        }
    )


def format_params(params: OpalParams) -> str:
    """Render parameters as ``key = value`` lines (full precision)."""
    lines = ["# Opal loss parameters: angles in degrees, sigma per degree", "units = degrees"]
    lines += [f"{key} = {getattr(params, key)!r}" for key in _PARAM_KEYS]
    return "\n".join(lines) + "\n"


def save_params(params: OpalParams, path: Path) -> None:
    Path(path).write_text(format_params(params), encoding="utf-8")
    logger.info(f"Wrote Opal parameters to {path}")


def load_params(path: Path) -> OpalParams:
    """Read a parameter file written by save_params.

    The constants a, b, c, d are re-derived from (ε, β, μ, σ); stored values
    that disagree by more than 1e-6 (relative) are reported and ignored.

    Raises:
        InputFileError: If the file is malformed or lacks a required key
    """
    values: dict[str, str] = {}
    for number, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputFileError(
                f"expected 'key = value', got {raw!r}", path=str(path), line=number
            )
        key, value = (part.strip() for part in line.split("=", 1))
        values[key] = value

    units = values.pop("units", "degrees")
    if units != "degrees":
        raise InputFileError(f"unsupported units {units!r}; only degrees", path=str(path))
    try:
        required = [float(values[key]) for key in ("epsilon", "beta", "mu", "sigma")]
    except KeyError as e:
        raise InputFileError(f"missing parameter {e.args[0]!r}", path=str(path)) from e
    except ValueError as e:
        raise InputFileError(f"non-numeric parameter: {e}", path=str(path)) from e

    try:
        params = derive_constants(*required)
    except InvalidArgumentError as e:
        raise InputFileError(str(e), path=str(path)) from e
    for key in ("a", "b", "c", "d"):
        if key not in values:
            continue
        try:
            stored = float(values[key])
        except ValueError as e:
            raise InputFileError(
                f"non-numeric parameter {key} = {values[key]!r}", path=str(path)
            ) from e
        derived = getattr(params, key)
        if abs(stored - derived) > 1e-6 * max(1.0, abs(derived)):
            logger.warning(f"{path}: stored {key} = {stored!r} differs from derived {derived!r}")
    return params
