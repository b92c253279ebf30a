"""
Training the topology heads
===========================

Lane features = coordinate embedding + feature embedding (a surrogate of
coordinates and class score when no detector features exist). The
lane-lane head scores concatenated feature pairs; the lane-traffic head
scores summed pairs. Focal loss supervises everything; labels project
from ground truth through optimal matching; AdamW updates once per scene.

A scaled-down run (the full recipe is 10 epochs at lr 2e-4 on 200
scenes; the acceptance suite exercises that one).
"""

import numpy as np

from lanetopo import (
    GeneratorConfig,
    HeadConfig,
    NoiseModel,
    corrupt_scene,
    generate_scene,
    init_params,
    predict,
    train,
)

gen = GeneratorConfig(scenes=150, lanes_per_scene=(6, 10), traffic_per_scene=(6, 10), seed=7)
scenes = [generate_scene(gen, i) for i in range(150)]
detections = [corrupt_scene(s, NoiseModel(), [7, i]) for i, s in enumerate(scenes)]

cfg = HeadConfig(feature_dim=64, mlp_hidden=64, epochs=10, lr=2e-3, seed=0)
params, stats = train(scenes[:120], detections[:120], scenes[120:135], detections[120:135], cfg)

print("epoch-mean losses (lane-lane + lane-traffic):")
for e, (ll, lt, total) in enumerate(
    zip(stats.epoch_loss_ll, stats.epoch_loss_lt, stats.epoch_loss_total), start=1
):
    print(f"  epoch {e}: ll={ll:.4f}  lt={lt:.4f}  total={total:.4f}")

# compare trained vs freshly initialized probabilities on a held-out scene
det = detections[140]
scene = scenes[140]
ll_trained, _ = predict(det, params)
ll_fresh, _ = predict(det, init_params(cfg))

edges = sorted(scene.topo_ll)[:3]
print("\npredicted probability on true successor edges (trained vs fresh):")
for a, b in edges:
    print(f"  edge ({a} -> {b}): {ll_trained[a, b]:.3f} vs {ll_fresh[a, b]:.3f}")
non_edges = [(i, j) for i in range(4) for j in range(4) if i != j and (i, j) not in scene.topo_ll][:3]
print("on non-edges:")
for a, b in non_edges:
    print(f"  pair ({a}, {b}): {ll_trained[a, b]:.3f} vs {ll_fresh[a, b]:.3f}")
