"""
Unit tests for region similarity, contour quality and J&F
"""
import math
import numpy as np
import pytest
from camforge.core.exceptions import DimensionError, EmptyInputError
from camforge.models.metrics import ClassScoreReport, LabelMask
from camforge.services.metrics_service import (
    boundary_map,
    contour_quality,
    default_tolerance,
    evaluate,
    evaluate_dataset,
    jf_score,
    region_similarity,
)


def mask(rows):
    return LabelMask(data=np.array(rows, dtype=np.int64))


def oracle_boundary(binary):
    """Foreground pixels at the border or next to a 4-neighbour of another value"""
    height, width = binary.shape
    points = []
    for y in range(height):
        for x in range(width):
            if not binary[y, x]:
                continue
            for dy, dx in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                ny, nx = y + dy, x + dx
                if not (0 <= ny < height and 0 <= nx < width) or not binary[ny, nx]:
                    points.append((y, x))
                    break
    return points


def oracle_f(pred, gt, tolerance):
    """O(n^2) nearest-boundary-distance F-score"""
    pred_points = oracle_boundary(pred)
    gt_points = oracle_boundary(gt)
    if not pred_points and not gt_points:
        return 1.0
    if not pred_points or not gt_points:
        return 0.0

    def matched(points, others):
        count = 0
        for p in points:
            nearest = min(math.hypot(p[0] - q[0], p[1] - q[1]) for q in others)
            if round(nearest) <= tolerance:
                count += 1
        return count

    precision = float(matched(pred_points, gt_points)) / len(pred_points)
    recall = float(matched(gt_points, pred_points)) / len(gt_points)
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


# ========================================
# Region similarity
# ========================================

@pytest.mark.unit
def test_identical_masks_score_one():
    """Test pred = gt gives J = F = J&F = 1"""
    gt = mask([[0, 1, 1], [0, 2, 2], [0, 0, 0]])

    report = evaluate(gt, gt, 2)

    assert report.mean_j == 1.0
    assert report.mean_f == 1.0
    assert report.jf == 1.0


@pytest.mark.unit
def test_disjoint_masks_score_zero():
    """Test disjoint equal-size masks of one class have J = 0"""
    pred = mask([[1, 1, 0, 0]] * 4)
    gt = mask([[0, 0, 1, 1]] * 4)

    report = region_similarity(pred, gt, 1)

    assert report.per_class[1] == 0.0


@pytest.mark.unit
def test_hand_counted_jaccard():
    """Test 8-pixel overlap of a 12-pixel union gives 2/3"""
    gt = mask([[1, 1, 1, 1], [1, 1, 1, 1], [1, 1, 0, 0], [0, 0, 0, 0]])
    pred = mask([[1, 1, 1, 1], [1, 1, 1, 1], [0, 0, 1, 1], [0, 0, 0, 0]])

    report = region_similarity(pred, gt, 1)

    assert report.per_class[1] == 8 / 12
    # background: {(3, *)} shared, union = 4 + 4 = 8 pixels with 4 shared
    assert report.per_class[0] == 4 / 8
    assert report.mean == (8 / 12 + 4 / 8) / 2


@pytest.mark.unit
def test_empty_union_is_not_scored():
    """Test classes absent from both masks are left out"""
    gt = mask([[0, 1], [0, 1]])

    report = region_similarity(gt, gt, 3)

    assert report.per_class == [1.0, 1.0, None, None]
    assert report.mean == 1.0


@pytest.mark.unit
def test_shape_mismatch():
    """Test masks of different size are rejected"""
    with pytest.raises(DimensionError):
        region_similarity(mask([[0, 1]]), mask([[0], [1]]), 1)


# ========================================
# Contour quality
# ========================================

@pytest.mark.unit
def test_boundary_map_includes_border():
    """Test a full 3x3 mask has every pixel but the center on its boundary"""
    boundary = boundary_map(np.ones((3, 3), dtype=bool))

    assert boundary.sum() == 8
    assert not boundary[1, 1]


@pytest.mark.unit
def test_default_tolerance():
    """Test tolerance is ceil(0.8% of the diagonal)"""
    assert default_tolerance(32, 32) == 1
    assert default_tolerance(500, 375) == 5


@pytest.mark.unit
def test_boundaries_beyond_tolerance_score_zero():
    """Test boundaries offset by tolerance + 2 everywhere give F = 0"""
    gt = np.zeros((32, 32), dtype=np.int64)
    gt[6:26, 6:26] = 1
    pred = np.zeros((32, 32), dtype=np.int64)
    pred[9:23, 9:23] = 1

    report = contour_quality(LabelMask(data=pred), LabelMask(data=gt), 1, tolerance_px=1)

    assert report.per_class[1] == 0.0


@pytest.mark.unit
def test_missing_class_in_prediction_scores_zero():
    """Test a class present only in ground truth gets F = 0"""
    gt = mask([[0, 1], [0, 1]])
    pred = mask([[0, 0], [0, 0]])

    report = contour_quality(pred, gt, 1)

    assert report.per_class == [None, 0.0]


@pytest.mark.unit
def test_background_only_masks_have_perfect_f():
    """Test no foreground anywhere means nothing to miss"""
    empty = mask([[0, 0], [0, 0]])

    assert contour_quality(empty, empty, 2).mean == 1.0


@pytest.mark.unit
def test_contour_quality_matches_brute_force_oracle():
    """Test morphological F equals the distance oracle on 1000 random masks"""
    data_rng = np.random.default_rng(31)
    for _ in range(1000):
        height, width = data_rng.integers(1, 11, size=2)
        classes = int(data_rng.integers(1, 3))
        tolerance = int(data_rng.integers(0, 3))
        pred = data_rng.integers(0, classes + 1, size=(height, width))
        gt = data_rng.integers(0, classes + 1, size=(height, width))

        report = contour_quality(LabelMask(data=pred), LabelMask(data=gt), classes, tolerance)

        for c in range(1, classes + 1):
            if not (pred == c).any() and not (gt == c).any():
                assert report.per_class[c] is None
                continue
            assert report.per_class[c] == oracle_f(pred == c, gt == c, tolerance)


@pytest.mark.unit
def test_contour_quality_is_symmetric():
    """Test F(pred, gt) = F(gt, pred)"""
    data_rng = np.random.default_rng(32)
    for _ in range(100):
        pred = LabelMask(data=data_rng.integers(0, 3, size=(10, 10)))
        gt = LabelMask(data=data_rng.integers(0, 3, size=(10, 10)))

        forward = contour_quality(pred, gt, 2, 1)
        backward = contour_quality(gt, pred, 2, 1)

        assert forward.mean == pytest.approx(backward.mean, abs=1e-12)


@pytest.mark.unit
def test_metrics_invariant_under_class_permutation():
    """Test swapping class indices in both masks changes nothing"""
    data_rng = np.random.default_rng(33)
    pred = data_rng.integers(0, 3, size=(10, 10))
    gt = data_rng.integers(0, 3, size=(10, 10))
    swap = np.array([0, 2, 1])

    original = evaluate(LabelMask(data=pred), LabelMask(data=gt), 2, 1)
    permuted = evaluate(LabelMask(data=swap[pred]), LabelMask(data=swap[gt]), 2, 1)

    assert permuted.mean_j == pytest.approx(original.mean_j, abs=1e-12)
    assert permuted.mean_f == pytest.approx(original.mean_f, abs=1e-12)


# ========================================
# J&F
# ========================================

@pytest.mark.unit
def test_jf_is_the_average():
    """Test J = 0.6 and F = 0.4 give 0.5"""
    report = jf_score(ClassScoreReport(per_class=[0.6], mean=0.6), ClassScoreReport(per_class=[None], mean=0.4))

    assert report.jf == 0.5


@pytest.mark.unit
def test_jf_fixed_point():
    """Test J = F gives J&F = J"""
    report = jf_score(ClassScoreReport(per_class=[0.7], mean=0.7), ClassScoreReport(per_class=[None], mean=0.7))

    assert report.jf == 0.7


@pytest.mark.unit
def test_evaluate_dataset_averages_images():
    """Test dataset scores average the per-image means"""
    perfect = mask([[0, 1], [0, 1]])
    wrong = mask([[1, 0], [1, 0]])

    report = evaluate_dataset([(perfect, perfect), (wrong, perfect)], 1)

    assert report.mean_j == pytest.approx(0.5)
    assert report.per_class_j[1] == pytest.approx(0.5)
    assert report.jf == pytest.approx((report.mean_j + report.mean_f) / 2, abs=1e-12)


@pytest.mark.unit
def test_evaluate_dataset_needs_pairs():
    """Test an empty dataset is an empty-input error"""
    with pytest.raises(EmptyInputError):
        evaluate_dataset([], 1)
