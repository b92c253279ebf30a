"""
Synthetic scenes and the detector-corruption channel
====================================================

Scenes are lane graphs grown from chains (successors share endpoints
exactly) plus traffic elements anchored to lanes. A noise model then
emulates an imperfect detector: geometry jitter, dropped and spurious
entities, category confusion, noisy confidences.
"""

import numpy as np

from lanetopo import GeneratorConfig, NoiseModel, corrupt_scene, generate_scene
from lanetopo.dataio import CATEGORY_NAMES

cfg = GeneratorConfig(scenes=1, lanes_per_scene=(6, 8), traffic_per_scene=(4, 6), branch_prob=0.5, seed=42)
scene = generate_scene(cfg, 0)

print(f"scene {scene.scene_id}: {len(scene.lanes)} lanes, {len(scene.traffic)} traffic elements")
print("lane-lane edges (successor relation):", sorted(scene.topo_ll))
print("lane-traffic edges:", sorted(scene.topo_lt))
for te in scene.traffic:
    print(f"  element {te.id}: {CATEGORY_NAMES[te.category]:>13}, box x-center {0.5 * (te.box[0] + te.box[2]):7.1f} px")

# successor lanes share the junction point exactly
a, b = sorted(scene.topo_ll)[0]
lanes = {l.id: l for l in scene.lanes}
print(f"\nedge ({a} -> {b}) shares the point {lanes[a].ctrl[-1]} exactly:",
      bool(np.array_equal(lanes[a].ctrl[-1], lanes[b].ctrl[0])))

print("\n--- identity channel (zero noise) ---")
clean = corrupt_scene(scene, NoiseModel(), seed=0)
print(f"{len(clean.lanes)} lanes survive, all confidences:",
      sorted({l.class_score for l in clean.lanes}))

print("\n--- harsh channel ---")
noise = NoiseModel(ctrl_sigma=0.5, box_sigma=15.0, drop_prob=0.3, spurious_rate=2.0, confusion_prob=0.2, conf_noise=0.4)
noisy = corrupt_scene(scene, noise, seed=0)
print(f"{len(noisy.lanes)} lanes and {len(noisy.traffic)} boxes come back "
      f"(dropped some, invented others)")
for lane in noisy.lanes[:3]:
    print(f"  lane score {lane.class_score:.3f}, start {np.round(lane.ctrl[0], 2)}")
