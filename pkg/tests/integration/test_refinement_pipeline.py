"""
Refinement Pipeline Integration Tests
Gaussian CAMs fitted to the synthetic corpus, refined with the feature
similarity loss alone and scored against the true masks
"""
import json
from pathlib import Path
import numpy as np
import pytest
from camforge.models.fsl import FslParams, GatingInput
from camforge.models.refine import RefineConfig
from camforge.services.corpus_service import load_corpus
from camforge.services.refine_service import evaluate_refinement, fit_gaussian_cam, refine_cam, sweep_mu_sigma

BAR = json.loads((Path(__file__).parent.parent / "fixtures" / "refine_bar.json").read_text())

MU_GRID = [0.5, 1.5, 2.5, 3.5, 4.5]
SIGMA_GRID = [1.0, 3.0, 5.0, 7.0, 9.0]


def protocol_config(step: float = BAR["step"], iterations: int = BAR["iterations"]) -> RefineConfig:
    return RefineConfig(
        step_size=step,
        iterations=iterations,
        params=FslParams(mu=BAR["mu"], sigma=BAR["sigma"], gating_input=GatingInput.BINOMIAL),
    )


# ========================================
# Test Corpus Refinement
# ========================================

@pytest.mark.integration
def test_refinement_improves_corpus_masks(corpus_dir):
    """Test refined CAMs beat the initial Gaussian CAMs in mean J and mean F"""
    samples = load_corpus(corpus_dir)
    config = protocol_config()

    reports = [evaluate_refinement(image, mask, config) for image, mask in samples]
    initial_j = np.mean([before.mean_j for before, _ in reports])
    refined_j = np.mean([after.mean_j for _, after in reports])
    initial_f = np.mean([before.mean_f for before, _ in reports])
    refined_f = np.mean([after.mean_f for _, after in reports])

    assert refined_j - initial_j >= BAR["min_j_gain"], f"J {initial_j:.3f} -> {refined_j:.3f}"
    assert refined_f - initial_f >= BAR["min_f_gain"], f"F {initial_f:.3f} -> {refined_f:.3f}"


@pytest.mark.integration
def test_offset_circle_is_recovered(circle_sample):
    """Test a Gaussian CAM shifted off a disc is pulled back onto it"""
    image, mask = circle_sample

    before, after = evaluate_refinement(image, mask, protocol_config(), offset=tuple(BAR["circle_offset"]))

    assert after.mean_j - before.mean_j >= BAR["circle_min_j_gain"]


@pytest.mark.integration
def test_trace_is_monotone_at_small_step(corpus_dir):
    """Test the loss never increases at step 0.01, halving the step at most twice"""
    samples = load_corpus(corpus_dir)[:5]

    for image, mask in samples:
        initial = fit_gaussian_cam(mask)
        step = 0.01
        for _ in range(3):
            trace = np.array(refine_cam(initial, image, protocol_config(step=step, iterations=50)).loss_trace)
            if np.all(np.diff(trace) <= 1e-12):
                break
            step /= 2.0
        else:
            pytest.fail(f"loss trace increased down to step {step * 2.0}")


# ========================================
# Test Parameter Sweep
# ========================================

@pytest.mark.integration
@pytest.mark.slow
def test_sweep_optimum_is_interior(corpus_dir):
    """Test the best mu is not on the grid edge and the default point is near the best"""
    samples = load_corpus(corpus_dir)

    report = sweep_mu_sigma(samples, MU_GRID, SIGMA_GRID, protocol_config(), threads=4)
    best = report.best
    default = next(p for p in report.points if p.mu == BAR["mu"] and p.sigma == BAR["sigma"])

    assert MU_GRID[0] < best.mu < MU_GRID[-1]
    assert best.jf - default.jf <= BAR["sweep_tolerance"]


@pytest.mark.integration
def test_very_large_mu_degrades_refinement(corpus_dir):
    """Test mu = 50, which treats every colour pair as similar, scores a lower J than mu = 2.5"""
    samples = load_corpus(corpus_dir)[:6]

    report = sweep_mu_sigma(samples, [BAR["mu"], 50.0], [BAR["sigma"]], protocol_config(), threads=2)
    default, large = report.points

    assert large.mu == 50.0
    assert large.mean_j < default.mean_j
