from __future__ import annotations

import json

import numpy as np
import pytest

from lanetopo import dataio
from lanetopo.dataio import (
    DetectionRecord,
    FormatError,
    GtLane,
    MetricReport,
    PredictionRecord,
    PredLane,
    SceneRecord,
    TrafficElement,
    ValidationError,
)


def make_scene(scene_id="s0", rng=None):
    rng = rng or np.random.default_rng(0)
    lanes = [GtLane(id=i, ctrl=rng.normal(scale=10.0, size=(4, 3))) for i in range(3)]
    traffic = [
        TrafficElement(id=k, box=np.array([10.0 * k, 5.0, 10.0 * k + 8.0, 20.0]), category=k % 13)
        for k in range(2)
    ]
    return SceneRecord(scene_id, lanes, traffic, topo_ll={(0, 1), (1, 2)}, topo_lt={(0, 0), (2, 1)})


def make_detection(scene_id="s0", rng=None, with_feature=False):
    rng = rng or np.random.default_rng(1)
    lanes = [
        PredLane(
            ctrl=rng.normal(scale=10.0, size=(4, 3)),
            class_score=float(rng.uniform()),
            feature=rng.normal(size=6) if with_feature else None,
        )
        for _ in range(3)
    ]
    traffic = [
        TrafficElement(id=k, box=np.array([5.0, 5.0, 30.0 + k, 40.0]), category=k % 13, confidence=0.5)
        for k in range(2)
    ]
    return DetectionRecord(scene_id, lanes, traffic)


def test_load_empty_file(tmp_path):
    p = tmp_path / "scenes.jsonl"
    p.write_text("")
    assert dataio.load_scenes(p) == []
    assert dataio.load_detections(p) == []


def test_scene_roundtrip(tmp_path):
    scene = make_scene()
    p = tmp_path / "scenes.jsonl"
    dataio.save_scenes([scene], p)
    loaded = dataio.load_scenes(p)
    assert loaded == [scene]


def test_scene_roundtrip_random_many(tmp_path):
    rng = np.random.default_rng(42)
    scenes = [make_scene(f"scene-{i}", rng) for i in range(10)]
    p = tmp_path / "scenes.jsonl"
    dataio.save_scenes(scenes, p)
    assert dataio.load_scenes(p) == scenes


def test_detection_roundtrip(tmp_path):
    rng = np.random.default_rng(9)
    records = [make_detection(f"s{i}", rng, with_feature=(i % 2 == 0)) for i in range(6)]
    p = tmp_path / "det.jsonl"
    dataio.save_detections(records, p)
    assert dataio.load_detections(p) == records


def test_prediction_roundtrip(tmp_path):
    det = make_detection("s0")
    rng = np.random.default_rng(5)
    pred = PredictionRecord(
        det.scene_id,
        det.lanes,
        det.traffic,
        topo_ll_prob=rng.uniform(size=(3, 3)),
        topo_lt_prob=rng.uniform(size=(3, 2)),
    )
    p = tmp_path / "pred.jsonl"
    dataio.save_detections([pred], p)
    loaded = dataio.load_detections(p)
    assert loaded == [pred]
    assert isinstance(loaded[0], PredictionRecord)


def test_topo_reference_to_missing_lane(tmp_path):
    scene = make_scene()
    scene.topo_ll.add((0, 99))
    p = tmp_path / "scenes.jsonl"
    dataio.save_scenes([scene], p)
    with pytest.raises(ValidationError, match="99"):
        dataio.load_scenes(p)


def test_self_edge_rejected():
    scene = make_scene()
    scene.topo_ll.add((1, 1))
    with pytest.raises(ValidationError, match="self-edge"):
        dataio.validate_scene(scene)


def test_duplicate_lane_id_rejected():
    scene = make_scene()
    scene.lanes[1].id = scene.lanes[0].id
    with pytest.raises(ValidationError, match="duplicate"):
        dataio.validate_scene(scene)


def test_confidence_out_of_range(tmp_path):
    det = make_detection()
    det.traffic[0].confidence = 1.2
    p = tmp_path / "det.jsonl"
    dataio.save_detections([det], p)
    with pytest.raises(ValidationError, match="confidence"):
        dataio.load_detections(p)


def test_class_score_out_of_range():
    det = make_detection()
    det.lanes[0].class_score = -0.1
    with pytest.raises(ValidationError, match="class_score"):
        dataio.validate_detection(det)


def test_query_budget_enforced():
    det = make_detection()
    with pytest.raises(ValidationError, match="query budget"):
        dataio.validate_detection(det, max_lanes=2)


def test_parse_failure_names_line(tmp_path):
    p = tmp_path / "broken.jsonl"
    good = json.dumps(dataio.scene_to_obj(make_scene()))
    p.write_text(good + "\n{not json}\n")
    with pytest.raises(FormatError, match=":2:"):
        dataio.load_scenes(p)


def test_mixed_control_point_counts_rejected(tmp_path):
    rng = np.random.default_rng(2)
    scene = make_scene(rng=rng)
    scene.lanes[2] = GtLane(id=2, ctrl=rng.normal(size=(5, 3)))
    p = tmp_path / "scenes.jsonl"
    dataio.save_scenes([scene], p)
    with pytest.raises(ValidationError, match="control points"):
        dataio.load_scenes(p)


def test_report_roundtrip(tmp_path):
    # fixture: final-leaderboard first row
    report = MetricReport(0.36, 0.80, 0.23, 0.33, 0.55,
                          lane_ap_by_threshold={1.0: 0.3, 2.0: 0.4, 3.0: 0.38},
                          traffic_ap_by_category={0: 0.9, 1: 0.7},
                          scene_count=5)
    p = tmp_path / "report.json"
    dataio.write_report(report, p)
    loaded = dataio.load_report(p)
    assert loaded == report
    table = (tmp_path / "report.json.txt").read_text()
    assert "DET_l" in table and "55.00" in table


def test_report_all_zero_valid(tmp_path):
    report = MetricReport(0.0, 0.0, 0.0, 0.0, 0.0)
    p = tmp_path / "zero.json"
    dataio.write_report(report, p)
    assert dataio.load_report(p).scores() == (0.0, 0.0, 0.0, 0.0, 0.0)
    assert json.loads(p.read_text())["warnings"] == []


def test_report_inconsistent_ols_warns(tmp_path):
    report = MetricReport(0.36, 0.80, 0.23, 0.33, 0.99)
    p = tmp_path / "warn.json"
    dataio.write_report(report, p)
    warnings = json.loads(p.read_text())["warnings"]
    assert len(warnings) == 1 and "inconsistent" in warnings[0]


def test_report_rejects_out_of_range(tmp_path):
    with pytest.raises(ValueError):
        dataio.write_report(MetricReport(1.5, 0, 0, 0, 0), tmp_path / "bad.json")
