from __future__ import annotations

import itertools

import numpy as np
import pytest

from lanetopo import metrics
from lanetopo.dataio import (
    GtLane,
    PredictionRecord,
    PredLane,
    SceneRecord,
    TrafficElement,
)
from lanetopo.metrics import DetMatchConfig, average_precision, evaluate, ols, top_score
from lanetopo.synthgen import GeneratorConfig, NoiseModel, corrupt_scene, generate_scene


def ap_oracle(flags, num_gt):
    """Precision-sum oracle, written independently of the implementation."""
    if num_gt == 0:
        return 1.0 if len(flags) == 0 else 0.0
    total = 0.0
    for k in range(1, len(flags) + 1):
        if flags[k - 1]:
            total += sum(flags[:k]) / k
    return total / num_gt


def straight_lane(y, lane_id=0, length=10.0, m=4):
    xs = np.linspace(0.0, length, m)
    ctrl = np.stack([xs, np.full(m, float(y)), np.zeros(m)], axis=1)
    return GtLane(id=lane_id, ctrl=ctrl)


def perfect_prediction(scene: SceneRecord) -> PredictionRecord:
    """Exact copies with confidence 1 and probabilities 1 on GT edges."""
    lanes = [PredLane(ctrl=l.ctrl.copy(), class_score=1.0) for l in scene.lanes]
    traffic = [
        TrafficElement(id=te.id, box=te.box.copy(), category=te.category, confidence=1.0)
        for te in scene.traffic
    ]
    n, t = len(lanes), len(traffic)
    lane_pos = {l.id: i for i, l in enumerate(scene.lanes)}
    te_pos = {te.id: k for k, te in enumerate(scene.traffic)}
    ll = np.zeros((n, n))
    for a, b in scene.topo_ll:
        ll[lane_pos[a], lane_pos[b]] = 1.0
    lt = np.zeros((n, t))
    for a, k in scene.topo_lt:
        lt[lane_pos[a], te_pos[k]] = 1.0
    return PredictionRecord(scene.scene_id, lanes, traffic, topo_ll_prob=ll, topo_lt_prob=lt)


# ---------------------------------------------------------------------------
# average precision


def test_ap_trivial_cases():
    assert average_precision([True, True], 2) == pytest.approx(1.0)
    assert average_precision([False, False], 1) == 0.0
    assert average_precision([True, False, True], 2) == pytest.approx(5.0 / 6.0)
    assert average_precision([], 0) == 1.0
    assert average_precision([False], 0) == 0.0


def test_ap_matches_oracle_random():
    rng = np.random.default_rng(3)
    for _ in range(300):
        n = int(rng.integers(0, 13))
        flags = list(rng.uniform(size=n) < 0.4)
        num_gt = int(rng.integers(0, 5))
        assert average_precision(flags, num_gt) == pytest.approx(ap_oracle(flags, num_gt))


def test_ap_exhaustive_short_sequences():
    for n in range(0, 7):
        for bits in itertools.product([False, True], repeat=n):
            for num_gt in range(1, 5):
                assert average_precision(list(bits), num_gt) == pytest.approx(
                    ap_oracle(list(bits), num_gt)
                )


# ---------------------------------------------------------------------------
# ols


def test_ols_reproduces_published_rows():
    golden = [
        ((0.36, 0.80, 0.23, 0.33), 0.55),
        ((0.42, 0.64, 0.07, 0.30), 0.47),
        ((0.22, 0.72, 0.13, 0.23), 0.45),
        ((0.2811, 0.6884, 0.1454, 0.1897), 0.4464),
        ((0.2811, 0.7989, 0.1454, 0.2165), 0.4816),
    ]
    for args, expected in golden:
        assert ols(*args) == pytest.approx(expected, abs=0.005)


def test_ols_simple_points():
    assert ols(1, 1, 1, 1) == 1.0
    assert ols(0, 0, 0, 0) == 0.0


def test_ols_monotone_and_topology_amplified():
    rng = np.random.default_rng(4)
    for _ in range(50):
        a = rng.uniform(size=4)
        b = a.copy()
        i = int(rng.integers(4))
        b[i] = min(1.0, b[i] + rng.uniform(0, 1 - b[i] + 1e-12))
        assert ols(*b) >= ols(*a) - 1e-12
    x = 0.25
    assert ols(0, 0, x, x) > ols(x, x, 0, 0)


def test_ols_rejects_out_of_range():
    with pytest.raises(ValueError):
        ols(1.2, 0, 0, 0)


# ---------------------------------------------------------------------------
# det_l / det_t


def test_det_l_perfect_and_empty():
    scene = SceneRecord("s0", [straight_lane(0, 0), straight_lane(5, 1)], [], set(), set())
    pred = perfect_prediction(scene)
    score, breakdown, pairs = metrics.det_l([pred], [scene])
    assert score == 1.0
    assert set(breakdown) == {1.0, 2.0, 3.0}
    assert sorted(pairs["s0"]) == [(0, 0), (1, 1)]

    empty = PredictionRecord("s0", [], [], np.zeros((0, 0)), np.zeros((0, 0)))
    score, _, _ = metrics.det_l([empty], [scene])
    assert score == 0.0


def test_det_l_threshold_staircase():
    # offset 1.5 m: misses tau=1, hits tau=2 and tau=3 -> mean 2/3
    scene = SceneRecord("s0", [straight_lane(0, 0), straight_lane(10, 1)], [], set(), set())
    lanes = [PredLane(ctrl=l.ctrl + np.array([0.0, 1.5, 0.0]), class_score=1.0) for l in scene.lanes]
    pred = PredictionRecord("s0", lanes, [], np.zeros((2, 2)), np.zeros((2, 0)))
    score, breakdown, _ = metrics.det_l([pred], [scene])
    assert breakdown[1.0] == 0.0
    assert breakdown[2.0] == 1.0
    assert breakdown[3.0] == 1.0
    assert score == pytest.approx(2.0 / 3.0)


def test_det_l_scene_mismatch_is_error():
    scene = SceneRecord("s0", [straight_lane(0, 0)], [], set(), set())
    pred = perfect_prediction(scene)
    pred.scene_id = "other"
    with pytest.raises(ValueError, match="s0"):
        metrics.det_l([pred], [scene])


def box_element(x, cat, conf=1.0, te_id=0):
    return TrafficElement(id=te_id, box=np.array([x, 10.0, x + 50.0, 60.0]), category=cat, confidence=conf)


def test_det_t_exact_predictions():
    scene = SceneRecord("s0", [], [box_element(0, 1, te_id=0), box_element(100, 2, te_id=1)], set(), set())
    pred = perfect_prediction(scene)
    score, breakdown, pairs = metrics.det_t([pred], [scene])
    assert score == 1.0
    assert breakdown == {1: 1.0, 2: 1.0}
    assert sorted(pairs["s0"]) == [(0, 0), (1, 1)]


def test_det_t_wrong_categories_score_zero():
    scene = SceneRecord("s0", [], [box_element(0, 1)], set(), set())
    wrong = PredictionRecord(
        "s0", [], [box_element(0, 2)], np.zeros((0, 0)), np.zeros((0, 1))
    )
    score, breakdown, _ = metrics.det_t([wrong], [scene])
    assert score == 0.0
    assert breakdown == {1: 0.0, 2: 0.0}


def test_det_t_two_attribute_mean():
    scene = SceneRecord("s0", [], [box_element(0, 1, te_id=0), box_element(200, 2, te_id=1)], set(), set())
    preds = [
        box_element(0, 1, te_id=0),  # perfect for attribute 1
        box_element(500, 2, te_id=1),  # disjoint from attribute-2 GT
    ]
    pred = PredictionRecord("s0", [], preds, np.zeros((0, 0)), np.zeros((0, 2)))
    score, breakdown, _ = metrics.det_t([pred], [scene])
    assert breakdown == {1: 1.0, 2: 0.0}
    assert score == pytest.approx(0.5)


def test_det_t_absent_categories_excluded():
    scene = SceneRecord("s0", [], [box_element(0, 5)], set(), set())
    pred = perfect_prediction(scene)
    _, breakdown, _ = metrics.det_t([pred], [scene])
    assert set(breakdown) == {5}


# ---------------------------------------------------------------------------
# topology score


def chain_scene(n=3):
    lanes = [straight_lane(6.0 * i, i) for i in range(n)]
    edges = {(i, i + 1) for i in range(n - 1)}
    return SceneRecord("s0", lanes, [], edges, set())


def test_top_perfect_probabilities():
    scene = chain_scene(3)
    pred = perfect_prediction(scene)
    pairs = [(i, i) for i in range(3)]
    assert top_score(pred, scene, pairs, edge_space="ll") == 1.0


def test_top_all_zero_probabilities_tie_order():
    # 2-lane chain, edge (0 -> 1): outgoing candidates rank before incoming
    # at equal probability, so vertex 0 scores 1 and vertex 1 scores 1/2.
    scene = chain_scene(2)
    pred = perfect_prediction(scene)
    pred.topo_ll_prob = np.zeros((2, 2))
    pairs = [(0, 0), (1, 1)]
    assert top_score(pred, scene, pairs, edge_space="ll") == pytest.approx(0.75)


def test_top_three_lane_chain_false_edge_below_true():
    scene = chain_scene(3)
    pred = perfect_prediction(scene)
    pred.topo_ll_prob = np.zeros((3, 3))
    pred.topo_ll_prob[0, 1] = 0.9
    pred.topo_ll_prob[1, 2] = 0.9
    pred.topo_ll_prob[0, 2] = 0.8  # false edge, still below the true ones
    pairs = [(i, i) for i in range(3)]
    assert top_score(pred, scene, pairs, edge_space="ll") == pytest.approx(1.0)


def test_top_three_lane_chain_false_edge_above_true():
    # per-vertex APs by hand: 0.5, 1.0, 0.5 -> mean 2/3
    scene = chain_scene(3)
    pred = perfect_prediction(scene)
    pred.topo_ll_prob = np.zeros((3, 3))
    pred.topo_ll_prob[0, 1] = 0.9
    pred.topo_ll_prob[1, 2] = 0.9
    pred.topo_ll_prob[0, 2] = 0.95
    pairs = [(i, i) for i in range(3)]
    assert top_score(pred, scene, pairs, edge_space="ll") == pytest.approx(2.0 / 3.0)


def test_top_undetected_vertex_scores_zero():
    scene = chain_scene(2)
    pred = perfect_prediction(scene)
    # lane 1 undetected: only lane 0 matched
    pairs = [(0, 0)]
    score = top_score(pred, scene, pairs, edge_space="ll")
    # vertex 0 detected: its only candidate set has no matched endpoint -> AP 0;
    # vertex 1 undetected -> 0
    assert score == 0.0


def test_top_lt_covers_both_sides():
    lane = straight_lane(0, 0)
    te = box_element(0, 1, te_id=0)
    scene = SceneRecord("s0", [lane], [te], set(), {(0, 0)})
    pred = perfect_prediction(scene)
    assert top_score(pred, scene, [(0, 0)], [(0, 0)], edge_space="lt") == 1.0
    # drop the traffic match: lane vertex candidates all unmatched -> 0, traffic vertex undetected -> 0
    assert top_score(pred, scene, [(0, 0)], [], edge_space="lt") == 0.0


def test_top_vacuous_scene():
    scene = SceneRecord("s0", [straight_lane(0, 0)], [], set(), set())
    pred = perfect_prediction(scene)
    assert top_score(pred, scene, [(0, 0)], edge_space="ll") == 1.0


# ---------------------------------------------------------------------------
# evaluate


def test_evaluate_perfect_generated_scenes():
    cfg = GeneratorConfig(scenes=3, seed=17)
    scenes = [generate_scene(cfg, i) for i in range(3)]
    preds = [perfect_prediction(s) for s in scenes]
    report = evaluate(preds, scenes)
    assert report.scores() == (1.0, 1.0, 1.0, 1.0, 1.0)
    assert report.scene_count == 3


def test_evaluate_empty_predictions():
    cfg = GeneratorConfig(scenes=2, seed=19)
    scenes = [generate_scene(cfg, i) for i in range(2)]
    preds = [
        PredictionRecord(s.scene_id, [], [], np.zeros((0, 0)), np.zeros((0, 0)))
        for s in scenes
    ]
    report = evaluate(preds, scenes)
    assert report.scores() == (0.0, 0.0, 0.0, 0.0, 0.0)


def test_evaluate_invariant_to_scene_and_prediction_order():
    cfg = GeneratorConfig(scenes=4, seed=23)
    scenes = [generate_scene(cfg, i) for i in range(4)]
    rng = np.random.default_rng(5)
    preds = []
    for s in scenes:
        p = perfect_prediction(s)
        # distinct confidences, mild jitter
        for i, lane in enumerate(p.lanes):
            lane.ctrl = lane.ctrl + rng.normal(scale=0.2, size=lane.ctrl.shape)
            lane.class_score = float(0.99 - 0.07 * i)
        preds.append(p)
    base = evaluate(preds, scenes)

    shuffled_scenes = [scenes[i] for i in (2, 0, 3, 1)]
    shuffled_preds = [preds[i] for i in (1, 3, 0, 2)]
    again = evaluate(shuffled_preds, shuffled_scenes)
    assert again.scores() == pytest.approx(base.scores())

    # permute predictions within one scene, matrices permuted consistently
    p0 = preds[0]
    perm = list(reversed(range(len(p0.lanes))))
    permuted = PredictionRecord(
        p0.scene_id,
        [p0.lanes[i] for i in perm],
        p0.traffic,
        topo_ll_prob=p0.topo_ll_prob[np.ix_(perm, perm)],
        topo_lt_prob=p0.topo_lt_prob[perm, :],
    )
    third = evaluate([permuted] + preds[1:], scenes)
    assert third.scores() == pytest.approx(base.scores())


def test_evaluate_missing_scene_listed():
    cfg = GeneratorConfig(scenes=2, seed=29)
    scenes = [generate_scene(cfg, i) for i in range(2)]
    preds = [perfect_prediction(scenes[0])]
    with pytest.raises(ValueError, match="scene-00001"):
        evaluate(preds, scenes)


def test_detection_channel_monotone_in_noise():
    # componentwise-ordered noise models: mean DET_l over seeds must not increase
    cfg = GeneratorConfig(scenes=3, seed=31, lanes_per_scene=(6, 9))
    scenes = [generate_scene(cfg, i) for i in range(3)]
    mild = NoiseModel(ctrl_sigma=0.2, drop_prob=0.05)
    harsh = NoiseModel(ctrl_sigma=1.0, drop_prob=0.3)

    def mean_det_l(noise):
        scores = []
        for seed in range(20):
            preds = [
                corrupt_scene(s, noise, seed=[seed, i]) for i, s in enumerate(scenes)
            ]
            score, _, _ = metrics.det_l(preds, scenes)
            scores.append(score)
        return float(np.mean(scores))

    assert mean_det_l(mild) >= mean_det_l(harsh)
