"""
Detector-side data strategies
=============================

The traffic-attribute distribution is heavily skewed (unknown lights
near half of all annotations, yellow rare, the nine signs sharing about
a fifth). Four pure data operations address it: frame resampling,
foreground loss reweighting, pseudo labels, and multi-scale TTA fusion.
"""

import numpy as np

from lanetopo import GeneratorConfig, TrafficElement, generate_scene
from lanetopo.dataio import CATEGORY_NAMES
from lanetopo.detstrat import (
    PseudoConfig,
    category_histogram,
    class_weight_map,
    resample_plan,
    select_pseudo_labels,
    tta_merge,
)

gen = GeneratorConfig(scenes=60, seed=12)
frames = [generate_scene(gen, i) for i in range(60)]
stats = category_histogram(frames)

print("category distribution over the generated training frames:")
for name, count, freq in zip(CATEGORY_NAMES, stats.counts, stats.frequencies):
    bar = "#" * int(60 * freq)
    print(f"  {name:>13} {count:5d} {100 * freq:5.1f}% {bar}")

plan = resample_plan(frames, stats)
print(f"\nresampling: {len(frames)} frames -> {len(plan)} after duplicating rare-category frames")
dup = {i: plan.count(i) for i in range(len(frames)) if plan.count(i) > 1}
print(f"  {len(dup)} frames duplicated, factors seen: {sorted(set(dup.values()))}")

weights = class_weight_map({5, 7, 11}, 2.0)  # the easily-confused turn-left family
print("\nforeground loss weights:", weights.tolist())

preds = [
    TrafficElement(i, np.array([10.0 * i, 0.0, 10.0 * i + 8.0, 8.0]), 1, conf)
    for i, conf in enumerate((0.95, 0.41, 0.77, 0.52))
]
kept = select_pseudo_labels(preds, PseudoConfig(confidence_threshold=0.5))
print(f"\npseudo labels at threshold 0.5: kept {[p.element.id for p in kept]} with weight 1.0")

# the same physical box seen at two test scales merges back to one
base = TrafficElement(0, np.array([100.0, 100.0, 180.0, 160.0]), 2, 0.9)
upscaled = TrafficElement(1, base.box * 1.4, 2, 0.75)
merged = tta_merge([(1.0, [base]), (1.4, [upscaled])])
print(f"\nTTA fusion: 2 boxes across scales -> {len(merged)}, "
      f"survivor confidence {merged[0].confidence}, box {merged[0].box.tolist()}")
