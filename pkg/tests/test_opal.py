import logging
from pathlib import Path

import numpy as np
import pytest

from headpose_eval.errors import (
    EmptyInputError,
    FitInfeasibleError,
    InputFileError,
    InvalidArgumentError,
)
from headpose_eval.metrics import g_geodesic
from headpose_eval.models import EulerAnglesPYR, OpalParams
from headpose_eval.opal import (
    default_params,
    derive_constants,
    f_opal,
    fit_params,
    format_params,
    g_opal,
    influence_peak,
    load_params,
    opal_curve,
    opal_influence,
    params_from_peak,
    save_params,
)
from headpose_eval.so3 import euler_to_rotation

from .factories import perturb


def _random_params(rng: np.random.Generator) -> OpalParams:
    """Valid parameters with cosh²(σβ−μ) ≤ cosh²(3)."""
    epsilon = rng.uniform(0.5, 5.0)
    sigma = rng.uniform(0.05, 0.5)
    peak = epsilon + rng.uniform(0.5, 5.0)
    beta = peak + rng.uniform(0.5, min(3.0 / sigma, 20.0))
    return params_from_peak(epsilon, beta, peak, sigma)


@pytest.fixture
def params() -> OpalParams:
    """Create the default Opal parameters."""
    return default_params()


def test_default_constants(params: OpalParams) -> None:
    """Test the default thresholds and continuity residuals."""
    assert (params.epsilon, params.beta, params.sigma) == (2.0, 12.0, 0.3)
    assert params.mu == pytest.approx(1.65)
    assert max(abs(r) for r in params.continuity_residuals()) < 1e-9
    assert params.c == pytest.approx(np.cosh(0.3 * 12 - 1.65) ** 2 / 0.3)


def test_random_constants_are_continuous(rng: np.random.Generator) -> None:
    """Test continuity and differentiability for 100 random parameter tuples."""
    for _ in range(100):
        p = _random_params(rng)
        assert max(abs(r) for r in p.continuity_residuals()) < 1e-9
        for edge in (p.epsilon, p.beta):
            assert g_opal(edge - 1e-12, p) == pytest.approx(g_opal(edge, p), abs=1e-8)
            slope = opal_influence(edge, p)
            assert opal_influence(edge - 1e-12, p) == pytest.approx(slope, abs=1e-8)


def test_derive_rejects_invalid_ordering() -> None:
    """Test parameter validation."""
    with pytest.raises(InvalidArgumentError):
        derive_constants(12.0, 2.0, 1.65, 0.3)
    with pytest.raises(InvalidArgumentError):
        derive_constants(2.0, 12.0, 1.65, -0.3)
    with pytest.raises(InvalidArgumentError):
        params_from_peak(2.0, 12.0, 13.0, 0.3)
    with pytest.raises(InvalidArgumentError):
        derive_constants(2.0, 200.0, 1.65, 0.3)


def test_degenerate_right_edge() -> None:
    """Test that c → 1/σ as σβ − μ → 0."""
    p = derive_constants(2.0, 12.0, 0.5 * 12.0 - 1e-9, 0.5)
    assert p.c == pytest.approx(1.0 / 0.5, rel=1e-12)
    assert opal_influence(12.0, p) == 1.0


def test_loss_values(params: OpalParams) -> None:
    """Test the branch values."""
    assert g_opal(0.0, params) == pytest.approx(params.b)
    for G in (12.0, 30.0, 179.0):
        assert g_opal(G + 1.0, params) - g_opal(G, params) == pytest.approx(1.0, abs=1e-12)
    grid = np.linspace(0.0, 180.0, 18001)
    assert np.all(np.diff(g_opal(grid, params)) >= 0.0)
    with pytest.raises(InvalidArgumentError):
        g_opal(-0.1, params)
    with pytest.raises(InvalidArgumentError):
        opal_influence(np.array([1.0, np.inf]), params)


def test_influence_matches_finite_differences(params: OpalParams) -> None:
    """Test the analytic influence against central differences away from the breakpoints."""
    h = 1e-5
    grid = np.geomspace(1e-2, 179.0, 400)
    grid = grid[(np.abs(grid - params.epsilon) > 2 * h) & (np.abs(grid - params.beta) > 2 * h)]
    numeric = (g_opal(grid + h, params) - g_opal(grid - h, params)) / (2 * h)
    assert np.allclose(opal_influence(grid, params), numeric, rtol=1e-6, atol=0.0)


def test_influence_shape(params: OpalParams) -> None:
    """Test the influence at zero, at its peak and beyond β."""
    assert opal_influence(0.0, params) == 0.0
    assert opal_influence(params.beta, params) == 1.0
    tail = np.linspace(params.beta, 180.0, 500)
    assert np.all(opal_influence(tail, params) == 1.0)

    location, height = influence_peak(params)
    assert location == pytest.approx(5.5)
    assert height == pytest.approx(np.cosh(0.3 * 12 - 1.65) ** 2)
    assert opal_influence(location, params) == pytest.approx(height)
    grid = np.linspace(0.0, 180.0, 18001)
    assert np.max(opal_influence(grid, params)) <= height + 1e-12


def test_small_epsilon_tail_is_l1_like() -> None:
    """Test that a near-unit influence keeps g_opal(G) − G bounded."""
    p = params_from_peak(0.1, 1.0, 0.5, 0.1)
    assert p.c * p.sigma == pytest.approx(1.0, abs=0.01)
    grid = np.linspace(0.0, 180.0, 1801)
    offset = g_opal(grid, p) - grid
    assert np.max(np.abs(offset)) < 0.5
    assert np.ptp(offset[grid >= p.beta]) < 1e-9


def test_f_opal(params: OpalParams) -> None:
    """Test the data set loss."""
    R = euler_to_rotation(EulerAnglesPYR(pitch=10.0, yaw=-20.0, roll=5.0))
    assert f_opal([(R, R), (R, R)], params) == pytest.approx(params.b, abs=1e-9)

    shifted = perturb(R, 7.0, axis=(0.3, 1.0, 0.0))
    assert f_opal([(shifted, R)], params) == pytest.approx(g_opal(g_geodesic(shifted, R), params))

    pairs = [(perturb(R, angle), R) for angle in (1.0, 5.0, 20.0)]
    brute = np.mean([g_opal(g_geodesic(a, b), params) for a, b in pairs])
    assert f_opal(pairs, params) == pytest.approx(brute)
    with pytest.raises(EmptyInputError):
        f_opal([], params)


@pytest.mark.parametrize("t", [1.0, 5.0, 20.0])
def test_full_chain_gradient(params: OpalParams, t: float) -> None:
    """Test d f_opal / dt through the geodesic distance for R̂ = R·exp(t·axis)."""
    R = euler_to_rotation(EulerAnglesPYR(pitch=-15.0, yaw=40.0, roll=25.0))
    axis = (0.2, -0.5, 0.8)
    h = 1e-4

    def loss(angle: float) -> float:
        return f_opal([(perturb(R, angle, axis), R)], params)

    numeric = (loss(t + h) - loss(t - h)) / (2 * h)
    assert numeric == pytest.approx(opal_influence(t, params), rel=1e-5)


def test_fit_params_on_concentrated_errors(rng: np.random.Generator) -> None:
    """Test that the influence peak moves to the dominant error range."""
    fitted = fit_params(rng.normal(5.5, 0.5, 5000))
    assert abs(fitted.peak - 5.5) < 0.5
    assert (fitted.epsilon, fitted.beta) == (2.0, 12.0)

    single = fit_params(np.full(100, 6.3))
    assert single.peak == pytest.approx(6.3)


def test_fit_params_tie_break() -> None:
    """Test that equal modes resolve toward the smaller error."""
    tied = fit_params(np.concatenate([np.full(1000, 4.0), np.full(1000, 8.0)]))
    assert tied.peak == pytest.approx(4.0)
    larger = fit_params(np.concatenate([np.full(1000, 4.0), np.full(1200, 8.0)]))
    assert larger.peak == pytest.approx(8.0)


@pytest.mark.parametrize("spread", [1.5, 2.0])
def test_fit_params_recovers_spread(spread: float) -> None:
    """Test that the fitted sech² FWHM tracks the Gaussian FWHM within one bin."""
    samples = np.random.default_rng(17).normal(7.25, spread, 50_000)
    fitted = fit_params(samples)
    assert fitted.peak == pytest.approx(7.25, abs=0.5)

    fwhm = 2.0 * np.arccosh(np.sqrt(2.0)) / fitted.sigma
    expected = 2.0 * np.sqrt(2.0 * np.log(2.0)) * spread
    assert fwhm == pytest.approx(expected, abs=0.5)


def test_fit_params_caps_narrow_influence(caplog: pytest.LogCaptureFixture) -> None:
    """Test that a one-bin distribution still gives finite constants for a wide β."""
    with caplog.at_level(logging.WARNING, logger="headpose_eval.opal"):
        wide = fit_params(np.full(100, 6.3), 2.0, 180.0)
    assert wide.peak == pytest.approx(6.3)
    assert wide.sigma * (wide.beta - wide.peak) == pytest.approx(20.0)
    assert np.isfinite([wide.a, wide.b, wide.c, wide.d]).all()
    assert max(abs(r) for r in wide.continuity_residuals()) < 1e-9 * wide.c
    assert "too narrow" in caplog.text

    caplog.clear()
    with caplog.at_level(logging.WARNING, logger="headpose_eval.opal"):
        fit_params(np.random.default_rng(5).normal(6.0, 1.5, 5000))
    assert "too narrow" not in caplog.text


def test_fit_params_errors() -> None:
    """Test fits without usable samples."""
    with pytest.raises(EmptyInputError):
        fit_params([])
    with pytest.raises(FitInfeasibleError):
        fit_params([0.5, 1.0, 15.0, 40.0])


def test_opal_curve(params: OpalParams) -> None:
    """Test the plot-ready table."""
    table = opal_curve(params)
    assert list(table.columns) == [
        "G", "opal_loss", "opal_influence", "geodesic_loss", "geodesic_influence"
    ]
    assert len(table) == 1801
    assert table["opal_influence"].iloc[-1] == 1.0
    assert np.array_equal(table["geodesic_loss"], table["G"])


def test_params_file_round_trip(params: OpalParams, tmp_path: Path) -> None:
    """Test saving and loading parameters."""
    path = tmp_path / "opal.txt"
    save_params(params, path)
    assert "units = degrees" in path.read_text()
    assert load_params(path) == params
    assert format_params(params) == path.read_text()


def test_load_params_errors(tmp_path: Path, caplog: pytest.LogCaptureFixture) -> None:
    """Test malformed parameter files and stale constants."""
    path = tmp_path / "opal.txt"
    path.write_text("epsilon = 2.0\nbeta = 12.0\nsigma = 0.3\n")
    with pytest.raises(InputFileError, match="mu"):
        load_params(path)

    path.write_text("units = radians\nepsilon = 2.0\nbeta = 12.0\nmu = 1.65\nsigma = 0.3\n")
    with pytest.raises(InputFileError, match="units"):
        load_params(path)

    path.write_text("epsilon = 2.0\nbeta = 12.0\nmu = 1.65\nsigma = 0.3\nc = 1.0\n")
    with caplog.at_level(logging.WARNING, logger="headpose_eval.opal"):
        loaded = load_params(path)
    assert loaded == default_params()
    assert "differs from derived" in caplog.text

    path.write_text("epsilon = 2.0\nbeta = 12.0\nmu = 1.65\nsigma = 0.3\nc = lots\n")
    with pytest.raises(InputFileError, match="non-numeric parameter c"):
        load_params(path)

    path.write_text("epsilon = 2.0\nbeta = 12.0\nmu = 3.9\nsigma = 0.3\n")
    with pytest.raises(InputFileError, match="influence peak"):
        load_params(path)
