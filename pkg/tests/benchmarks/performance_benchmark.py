"""
Performance Benchmarks
Runtime bounds for gradient checks and corpus refinement
"""
import pytest
import time
import statistics
from typing import List, Dict
import numpy as np
from camforge.core.config import settings
from camforge.models.fsl import FslParams, GatingInput
from camforge.models.refine import RefineConfig
from camforge.models.sampling import LabelVector
from camforge.models.tensors import PosteriorKind, RgbImage, ScoreMap
from camforge.services.corpus_service import load_corpus
from camforge.services.feature_similarity_service import FeatureSimilarityOperator
from camforge.services.importance_sampling_service import (
    draw_samples,
    gap_bce_loss,
    isl_loss,
    posterior_for_profile,
    sampling_distribution,
)
from camforge.services.refine_service import evaluate_refinement
from camforge.utils.gradient_check import finite_difference


class PerformanceBenchmark:
    """Performance benchmark runner"""

    def __init__(self):
        self.results: List[Dict] = []

    def record(self, name: str, latency: float, success: bool = True):
        """Record benchmark result"""
        self.results.append({
            "name": name,
            "latency_s": latency,
            "success": success,
            "timestamp": time.time()
        })

    def report(self, name: str = None) -> Dict:
        """Summarize recorded latencies, optionally for one benchmark"""
        results = [r for r in self.results if name is None or r["name"] == name]
        if not results:
            return {}

        latencies = [r["latency_s"] for r in results if r["success"]]
        return {
            "runs": len(results),
            "failures": sum(1 for r in results if not r["success"]),
            "total_s": sum(latencies),
            "mean_s": statistics.mean(latencies) if latencies else 0,
            "median_s": statistics.median(latencies) if latencies else 0,
            "max_s": max(latencies) if latencies else 0,
        }


# Global benchmark instance
benchmark = PerformanceBenchmark()


# ========================================
# Benchmark: Gradient Checks
# ========================================

@pytest.mark.benchmark
def test_benchmark_gradient_checks():
    """Benchmark finite-difference checks of every loss on 20 3x8x8 instances"""
    data_rng = np.random.default_rng(0)
    operators = {
        gating: FslParams(gating_input=gating)
        for gating in (GatingInput.RAW, GatingInput.BINOMIAL, GatingInput.MULTINOMIAL)
    }

    for trial in range(20):
        start = time.time()
        x0 = data_rng.normal(0.0, 1.0, size=(3, 8, 8))
        labels = LabelVector(y=data_rng.integers(0, 2, 3).astype(float))
        image = RgbImage(data=data_rng.uniform(0.0, 1.0, size=(8, 8, 3)))

        finite_difference(lambda x: gap_bce_loss(labels, ScoreMap(data=x)).value, x0)

        scores = ScoreMap(data=x0)
        post = posterior_for_profile(scores, PosteriorKind.BINOMIAL)
        samples = draw_samples(sampling_distribution(post), post, 10, rng_seed=trial)
        isl_loss(labels, samples, scores, post)

        for params in operators.values():
            operator = FeatureSimilarityOperator(image, params)
            finite_difference(lambda x: operator.loss(ScoreMap(data=x)).value, x0)

        benchmark.record("gradient_checks", time.time() - start)

    stats = benchmark.report("gradient_checks")
    print(f"\nGradient checks: {stats['total_s']:.2f}s total, {stats['mean_s']:.3f}s per instance")
    assert stats["total_s"] < 30.0, f"Gradient checks took {stats['total_s']:.1f}s, expected < 30s"


# ========================================
# Benchmark: Corpus Refinement
# ========================================

@pytest.mark.benchmark
@pytest.mark.slow
def test_benchmark_corpus_refinement(corpus_dir):
    """Benchmark single-threaded refinement of the default corpus"""
    config = RefineConfig(
        step_size=settings.SWEEP_STEP_SIZE,
        iterations=settings.ITERATIONS,
        params=FslParams(gating_input=GatingInput.BINOMIAL),
    )

    for image, mask in load_corpus(corpus_dir):
        start = time.time()
        evaluate_refinement(image, mask, config)
        benchmark.record("corpus_refinement", time.time() - start)

    stats = benchmark.report("corpus_refinement")
    print(f"\nCorpus refinement: {stats['runs']} images in {stats['total_s']:.1f}s (max {stats['max_s']:.2f}s)")
    assert stats["total_s"] < 300.0, f"Refinement took {stats['total_s']:.1f}s, expected < 5 min"
