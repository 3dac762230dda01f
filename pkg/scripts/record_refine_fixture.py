"""
Record the refinement quality bar used by the integration tests

Runs the corpus refinement protocol and writes the measured gains, with a
safety margin, to tests/fixtures/refine_bar.json.
"""
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent))

import numpy as np
import orjson
from camforge.core.config import settings
from camforge.models.fsl import FslParams, GatingInput
from camforge.models.refine import RefineConfig
from camforge.services.corpus_service import generate_corpus, load_corpus
from camforge.services.refine_service import evaluate_refinement

FIXTURE = Path(__file__).parent.parent / "tests" / "fixtures" / "refine_bar.json"
MARGIN = 0.8
MIN_J_GAIN = 0.10
MIN_F_GAIN = 0.05


def record_refine_fixture() -> bool:
    """Measure mean J / F gains on the seed-0 corpus and store the bar"""
    bar = orjson.loads(FIXTURE.read_bytes())
    config = RefineConfig(
        step_size=bar["step"],
        iterations=bar["iterations"],
        params=FslParams(mu=bar["mu"], sigma=bar["sigma"], gating_input=GatingInput.BINOMIAL),
    )

    print("=" * 60)
    print("  Refinement Fixture")
    print("=" * 60)
    print(f"step={config.step_size} iterations={config.iterations} mu={bar['mu']} sigma={bar['sigma']}")
    print()

    with tempfile.TemporaryDirectory() as corpus_dir:
        generate_corpus(corpus_dir, seed=bar["corpus_seed"], count=settings.CORPUS_COUNT)
        reports = [evaluate_refinement(image, mask, config) for image, mask in load_corpus(corpus_dir)]

    j_gain = float(np.mean([after.mean_j - before.mean_j for before, after in reports]))
    f_gain = float(np.mean([after.mean_f - before.mean_f for before, after in reports]))
    print(f"Mean J gain: {j_gain:.4f}")
    print(f"Mean F gain: {f_gain:.4f}")

    if j_gain < MIN_J_GAIN or f_gain < MIN_F_GAIN:
        print(f"\n[X] Gains below the required {MIN_J_GAIN} / {MIN_F_GAIN}; fixture left unchanged")
        return False

    bar["min_j_gain"] = max(MIN_J_GAIN, round(MARGIN * j_gain, 3))
    bar["min_f_gain"] = max(MIN_F_GAIN, round(MARGIN * f_gain, 3))
    FIXTURE.write_bytes(orjson.dumps(bar, option=orjson.OPT_INDENT_2) + b"\n")
    print(f"\n[OK] Wrote {FIXTURE}")
    return True


if __name__ == "__main__":
    try:
        success = record_refine_fixture()
        sys.exit(0 if success else 1)
    except KeyboardInterrupt:
        print("\n\n[CANCELLED] Recording interrupted by user")
        sys.exit(1)
