"""Pixel metrics, instance matching, sweeps and plateau detection."""

import numpy as np
import pytest

from defectkit import (
    CocoAnnotation,
    CocoCategory,
    CocoDataset,
    CocoImage,
    Confusion,
    Detection,
    DetectionSet,
    MetricPoint,
    SeriesPoint,
    evaluate_dataset,
    f1,
    find_plateau,
    match_instances,
    pixel_confusion,
    precision,
    recall,
    sweep,
)
from defectkit.metrics import metric_points_to_csv, series_from_csv


def naive_confusion(pred, gt):
    tp = fp = fn = tn = 0
    h, w = pred.shape
    for y in range(h):
        for x in range(w):
            if pred[y, x] and gt[y, x]:
                tp += 1
            elif pred[y, x]:
                fp += 1
            elif gt[y, x]:
                fn += 1
            else:
                tn += 1
    return tp, fp, fn, tn


def rect_seg(x0, y0, x1, y1):
    """Flat rectangle polygon covering pixels [x0,x1) x [y0,y1)."""
    return (x0, y0, x1, y0, x1, y1, x0, y1)


# --- pixel_confusion -----------------------------------------------------


def test_pixel_confusion_examples():
    gt = np.zeros((8, 8), dtype=bool)
    gt.flat[:10] = True
    c = pixel_confusion(gt, gt)
    assert (c.tp, c.fp, c.fn, c.tn) == (10, 0, 0, 54)

    pred = np.zeros((5, 1), dtype=bool)
    gt = np.ones((5, 1), dtype=bool)
    c = pixel_confusion(pred, gt)
    assert (c.tp, c.fn) == (0, 5)

    pred = np.array([[True, True], [False, False]])
    gt = np.array([[False, True], [True, False]])
    c = pixel_confusion(pred, gt)
    assert (c.tp, c.fp, c.fn, c.tn) == (1, 1, 1, 1)


def test_pixel_confusion_mismatch():
    with pytest.raises(ValueError, match="shapes differ"):
        pixel_confusion(np.zeros((2, 2), dtype=bool), np.zeros((3, 2), dtype=bool))


def test_confusion_matches_naive_oracle():
    rng = np.random.default_rng(19)
    for _ in range(50):
        pred = rng.random((9, 9)) < 0.5
        gt = rng.random((9, 9)) < 0.5
        c = pixel_confusion(pred, gt)
        tp, fp, fn, tn = naive_confusion(pred, gt)
        assert (c.tp, c.fp, c.fn, c.tn) == (tp, fp, fn, tn)
        assert c.tp + c.fp + c.fn + c.tn == pred.size
        # swapping pred and gt swaps fp <-> fn and P <-> R
        s = pixel_confusion(gt, pred)
        assert (s.fp, s.fn) == (c.fn, c.fp)
        assert precision(s) == recall(c) and recall(s) == precision(c)


# --- ratios --------------------------------------------------------------


def test_precision_recall_examples_and_edges():
    assert precision(Confusion(tp=8, fp=2)) == 0.8
    assert precision(Confusion()) == 1.0  # both empty
    assert precision(Confusion(fn=3)) == 0.0
    assert recall(Confusion(tp=6, fn=2)) == 0.75
    assert recall(Confusion()) == 1.0
    assert recall(Confusion(tp=5)) == 1.0


def test_f1_examples():
    assert f1(1.0, 0.0) == 0.0
    assert f1(0.5, 1.0) == pytest.approx(2 / 3, abs=1e-12)
    for x in np.linspace(0.0, 1.0, 51):
        assert abs(f1(x, x) - x) < 1e-12
    p, r = 0.3, 0.9
    assert min(p, r) <= f1(p, r) <= max(p, r)


# --- evaluate_dataset ----------------------------------------------------


def two_image_fixture():
    """Confusions (tp=3, fp=1, fn=0) and (tp=1, fp=1, fn=2)."""
    images = (CocoImage(1, "a.png", 8, 8), CocoImage(2, "b.png", 8, 8))
    gt_seg = rect_seg(1, 1, 4, 2)  # pixels (1,1),(2,1),(3,1)
    anns = (
        CocoAnnotation(1, 1, 1, 0, (gt_seg,), 3, (1, 1, 3, 1)),
        CocoAnnotation(2, 2, 1, 0, (gt_seg,), 3, (1, 1, 3, 1)),
    )
    gt = CocoDataset(images=images, categories=(CocoCategory(1, "defect"),), annotations=anns)
    preds = DetectionSet(
        (
            # image 1: covers (1,1)..(4,1) -> tp=3 fp=1
            Detection(1, 1, 0.9, (1, 1, 4, 1), (rect_seg(1, 1, 5, 2),)),
            # image 2: covers (3,1),(4,1) -> tp=1 fp=1 fn=2
            Detection(2, 1, 0.8, (3, 1, 2, 1), (rect_seg(3, 1, 5, 2),)),
        )
    )
    return preds, gt


def test_evaluate_micro_fixture():
    preds, gt = two_image_fixture()
    per_image, agg = evaluate_dataset(preds, gt, score_threshold=0.7, nms_iou=0.5)
    assert per_image[1].precision == pytest.approx(3 / 4)
    assert per_image[1].recall == 1.0
    assert per_image[2].precision == 0.5
    assert per_image[2].recall == pytest.approx(1 / 3)
    assert agg.precision == pytest.approx(4 / 6, abs=1e-12)
    assert agg.recall == pytest.approx(4 / 6, abs=1e-12)
    assert agg.f1 == pytest.approx(2 / 3, abs=1e-12)


def test_evaluate_perfect_predictions():
    preds, gt = two_image_fixture()
    perfect = DetectionSet(
        tuple(
            Detection(a.image_id, a.category_id, 1.0, a.bbox, a.segmentation)
            for a in gt.annotations
        )
    )
    _, agg = evaluate_dataset(perfect, gt)
    assert (agg.precision, agg.recall, agg.f1) == (1.0, 1.0, 1.0)


def test_evaluate_no_predictions():
    _, gt = two_image_fixture()
    _, agg = evaluate_dataset(DetectionSet(), gt)
    assert (agg.precision, agg.recall, agg.f1) == (0.0, 0.0, 0.0)


def test_evaluate_score_filter_applies():
    preds, gt = two_image_fixture()
    low = DetectionSet(tuple(
        Detection(d.image_id, d.category_id, 0.5, d.bbox, d.segmentation)
        for d in preds.detections
    ))
    _, agg = evaluate_dataset(low, gt)  # default threshold 0.7 drops everything
    assert agg.recall == 0.0


def test_evaluate_macro_option():
    preds, gt = two_image_fixture()
    _, macro = evaluate_dataset(preds, gt, average="macro")
    assert macro.precision == pytest.approx((3 / 4 + 1 / 2) / 2)
    assert macro.recall == pytest.approx((1.0 + 1 / 3) / 2)


def test_evaluate_unknown_image_id():
    preds, gt = two_image_fixture()
    bad = DetectionSet((Detection(99, 1, 0.9, (0, 0, 1, 1)),))
    with pytest.raises(ValueError, match="image_id 99"):
        evaluate_dataset(bad, gt)


# --- match_instances -----------------------------------------------------


def test_match_perfect():
    preds, gt = two_image_fixture()
    perfect = DetectionSet(
        tuple(
            Detection(a.image_id, a.category_id, 1.0, a.bbox, a.segmentation)
            for a in gt.annotations
        )
    )
    tp, fp, fn = match_instances(perfect, gt, 0.5)
    assert (tp, fp, fn) == (len(gt.annotations), 0, 0)


def test_match_stray_prediction_is_fp():
    _, gt = two_image_fixture()
    stray = DetectionSet((Detection(1, 1, 0.9, (6, 6, 1, 1), (rect_seg(6, 6, 7, 7),)),))
    tp, fp, fn = match_instances(stray, gt, 0.5)
    assert (tp, fp, fn) == (0, 1, len(gt.annotations))


def test_match_two_predictions_one_gt():
    images = (CocoImage(1, "a.png", 12, 4),)
    ann = CocoAnnotation(1, 1, 1, 0, (rect_seg(0, 0, 10, 1),), 10, (0, 0, 10, 1))
    gt = CocoDataset(images, (CocoCategory(1, "d"),), (ann,))
    preds = DetectionSet(
        (
            Detection(1, 1, 0.9, (0, 0, 8, 1), (rect_seg(0, 0, 8, 1),)),  # IoU 0.8
            Detection(1, 1, 0.8, (0, 0, 6, 1), (rect_seg(0, 0, 6, 1),)),  # IoU 0.6
        )
    )
    tp, fp, fn = match_instances(preds, gt, 0.5)
    assert (tp, fp, fn) == (1, 1, 0)
    # bookkeeping identities
    assert tp + fp == len(preds)
    assert tp + fn == len(gt.annotations)


# --- sweep ---------------------------------------------------------------


def test_sweep_single_run_equals_evaluate():
    preds, gt = two_image_fixture()
    (pt,) = sweep([(100, preds)], gt)
    _, agg = evaluate_dataset(preds, gt)
    assert pt == MetricPoint(100, agg.precision, agg.recall, agg.f1)


def test_sweep_six_points():
    preds, gt = two_image_fixture()
    runs = [(it, preds) for it in range(100, 700, 100)]
    points = sweep(runs, gt)
    assert [pt.iteration for pt in points] == [100, 200, 300, 400, 500, 600]


def test_sweep_duplicate_iterations():
    preds, gt = two_image_fixture()
    with pytest.raises(ValueError, match="strictly increasing"):
        sweep([(100, preds), (100, preds)], gt)


# --- find_plateau --------------------------------------------------------


def paper_series():
    values = [0.20, 0.35, 0.50, 0.60, 0.65, 0.66, 0.66, 0.65, 0.64, 0.63]
    return [SeriesPoint(100 * (i + 1), v) for i, v in enumerate(values)]


def test_plateau_paper_series():
    assert find_plateau(paper_series(), "maximize", patience=2, min_delta=0.01) == 600


def test_plateau_still_improving():
    series = [SeriesPoint(100 * (i + 1), 0.1 * (i + 1)) for i in range(10)]
    assert find_plateau(series, "maximize", patience=2, min_delta=0.01) is None


def test_plateau_minimize_loss():
    series = [SeriesPoint(i, v) for i, v in enumerate([0.9, 0.5, 0.3, 0.4, 0.6], start=1)]
    assert find_plateau(series, "minimize", patience=1, min_delta=0.01) == 3


def test_plateau_errors():
    with pytest.raises(ValueError, match="patience"):
        find_plateau(paper_series(), patience=0)
    with pytest.raises(ValueError, match="empty"):
        find_plateau([])
    with pytest.raises(ValueError, match="strictly increasing"):
        find_plateau([SeriesPoint(2, 0.1), SeriesPoint(1, 0.2)])
    with pytest.raises(ValueError, match="mode"):
        find_plateau(paper_series(), mode="best")


# --- csv helpers ---------------------------------------------------------


def test_metric_csv_and_series_round_trip():
    points = [MetricPoint(100, 0.5, 0.25, 1 / 3), MetricPoint(200, 1.0, 1.0, 1.0)]
    text = metric_points_to_csv(points)
    assert text.splitlines()[0] == "iteration,precision,recall,f1"
    series = series_from_csv("iteration,value\n100,0.5\n200,0.75\n")
    assert series == [SeriesPoint(100, 0.5), SeriesPoint(200, 0.75)]
