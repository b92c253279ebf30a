"""
Topology quality tracks detection quality
=========================================

Train the heads once on clean detections, then feed them increasingly
corrupted detector outputs. Detection scores fall with noise, and the
topology scores fall with them: topology reasoning can only be as good
as the detections it reads. (A scaled-down version of the sweep the
acceptance suite runs with 20 seeds per level.)
"""

import numpy as np

from lanetopo import (
    GeneratorConfig,
    HeadConfig,
    NoiseModel,
    PredictionRecord,
    corrupt_scene,
    evaluate,
    generate_scene,
    predict,
    train,
)

gen = GeneratorConfig(scenes=60, seed=5)
scenes = [generate_scene(gen, i) for i in range(60)]
clean = [corrupt_scene(s, NoiseModel(), [5, i]) for i, s in enumerate(scenes)]
params, _ = train(scenes[:50], clean[:50], cfg=HeadConfig(feature_dim=48, mlp_hidden=48, epochs=5, lr=5e-4, seed=0))
held_out = scenes[50:]

levels = [
    NoiseModel(),
    NoiseModel(ctrl_sigma=0.25, drop_prob=0.1),
    NoiseModel(ctrl_sigma=0.5, drop_prob=0.3),
    NoiseModel(ctrl_sigma=1.0, drop_prob=0.3),
]

print(f"{'level':>5} {'DET_l':>8} {'DET_t':>8} {'TOP_ll':>8} {'TOP_lt':>8} {'OLS':>8}")
for li, noise in enumerate(levels):
    scores = []
    for rep in range(5):
        records = []
        for i, s in enumerate(held_out):
            det = corrupt_scene(s, noise, [99, li, rep, i])
            ll, lt = predict(det, params)
            records.append(PredictionRecord(s.scene_id, det.lanes, det.traffic, topo_ll_prob=ll, topo_lt_prob=lt))
        scores.append(evaluate(records, held_out).scores())
    mean = np.mean(np.asarray(scores), axis=0)
    print(f"{li:>5} " + " ".join(f"{100 * v:8.2f}" for v in mean))
