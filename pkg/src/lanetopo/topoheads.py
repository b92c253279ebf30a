"""Topology-reasoning heads and their from-scratch training machinery.

Two small MLP heads predict lane-lane and lane-traffic connectivity from
frozen detector outputs. Lane features are the sum of a coordinate
embedding and a feature embedding (detector features when available, a
surrogate built from coordinates and class score otherwise). Pairwise
lane-lane features are the concatenation of both lane features; pairwise
lane-traffic features are the elementwise sum of a lane and a traffic
feature. Supervision is focal loss over all pairs; gradients are
hand-derived and parameters update with a from-scratch AdamW.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Sequence

import numpy as np

from . import assoc
from .dataio import (
    IMAGE_HEIGHT,
    IMAGE_WIDTH,
    NUM_CATEGORIES,
    DetectionRecord,
    PredLane,
    SceneRecord,
    TrafficElement,
)


class TrainingError(RuntimeError):
    """Raised when the training loop hits a non-finite loss."""


@dataclass
class HeadConfig:
    feature_dim: int = 128  # C, width of lane/traffic features
    mlp_hidden: int = 128
    query_budget: int = 300  # N_max
    detector_feature_width: int | None = None
    control_points: int = 4  # M
    epochs: int = 10
    lr: float = 2e-4
    focal_alpha: float = 0.25
    focal_gamma: float = 2.0
    weight_decay: float = 0.01
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    coord_scale: float = 50.0  # meters; lane coordinates are divided by this
    lt_compose: str = "sum"  # "sum" (width C) or "concat" (width 2C)
    seed: int = 0

    def __post_init__(self):
        if self.feature_dim <= 0:
            raise ValueError("feature_dim must be > 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.lr < 0:
            raise ValueError("lr must be >= 0")
        if self.lt_compose not in ("sum", "concat"):
            raise ValueError(f"lt_compose must be 'sum' or 'concat', got {self.lt_compose!r}")


@dataclass
class MlpParams:
    """Affine-then-rectifier chain; identity on the last layer.

    weights[l] has shape (out_l, in_l); consecutive dimensions must chain.
    """

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self):
        if len(self.weights) != len(self.biases):
            raise ValueError("weights/biases length mismatch")
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[0],):
                raise ValueError(f"layer {l}: weight {w.shape} / bias {b.shape} malformed")
            if l > 0 and w.shape[1] != self.weights[l - 1].shape[0]:
                raise ValueError(
                    f"layer {l}: input width {w.shape[1]} != previous output {self.weights[l - 1].shape[0]}"
                )

    @property
    def in_dim(self) -> int:
        return self.weights[0].shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights[-1].shape[0]


@dataclass
class TopoHeadParams:
    config: HeadConfig
    coord_embedder: MlpParams
    feat_embedder: MlpParams
    traffic_embedder: MlpParams
    ll_head: MlpParams
    lt_head: MlpParams

    def modules(self) -> dict[str, MlpParams]:
        return {
            "coord_embedder": self.coord_embedder,
            "feat_embedder": self.feat_embedder,
            "traffic_embedder": self.traffic_embedder,
            "ll_head": self.ll_head,
            "lt_head": self.lt_head,
        }


@dataclass
class TrainStats:
    epoch_loss_ll: list[float] = field(default_factory=list)
    epoch_loss_lt: list[float] = field(default_factory=list)
    epoch_loss_total: list[float] = field(default_factory=list)
    epoch_grad_norm: list[float] = field(default_factory=list)
    val_loss_total: list[float] = field(default_factory=list)
    wall_clock_sec: float = 0.0


def stable_sigmoid(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def focal_loss(prob, target, alpha: float = 0.25, gamma: float = 2.0):
    """Focal loss of a sigmoid output and its gradient w.r.t. the logit.

    loss = -alpha_t * (1 - p_t)^gamma * log(p_t), with p_t = p for a
    positive target and 1 - p otherwise (alpha_t analogous). The returned
    gradient uses the closed form
        d loss / d logit = -alpha_t * s * ((1-p_t)^(gamma+1)
                            - gamma * p_t * (1-p_t)^gamma * log(p_t))
    with s = +1 for positives and -1 for negatives, which stays bounded at
    extreme logits. Vectorized over broadcastable inputs.
    """
    p = np.asarray(prob, dtype=float)
    t = np.asarray(target)
    pos = t == 1
    p_t = np.where(pos, p, 1.0 - p)
    a_t = np.where(pos, alpha, 1.0 - alpha)
    sign = np.where(pos, 1.0, -1.0)
    log_pt = np.log(np.maximum(p_t, np.finfo(float).tiny))
    one_m = 1.0 - p_t
    loss = -a_t * one_m**gamma * log_pt
    grad = -a_t * sign * (one_m ** (gamma + 1.0) - gamma * p_t * one_m**gamma * log_pt)
    if np.isscalar(prob) and np.isscalar(target):
        return float(loss), float(grad)
    return loss, grad


# ---------------------------------------------------------------------------
# MLP primitive


def mlp_init(dims: Sequence[int], rng: np.random.Generator) -> MlpParams:
    """Seeded uniform init in +-sqrt(6 / (fan_in + fan_out)) per layer.

    Biases draw from the same interval; exactly-zero biases would park
    rectifier pre-activations on the kink, which breaks finite-difference
    gradient checks.
    """
    weights, biases = [], []
    for d_in, d_out in zip(dims[:-1], dims[1:]):
        limit = np.sqrt(6.0 / (d_in + d_out))
        weights.append(rng.uniform(-limit, limit, size=(d_out, d_in)))
        biases.append(rng.uniform(-limit, limit, size=d_out))
    return MlpParams(weights, biases)


def mlp_zeros_like(params: MlpParams) -> MlpParams:
    return MlpParams([np.zeros_like(w) for w in params.weights], [np.zeros_like(b) for b in params.biases])


def mlp_forward(params: MlpParams, x) -> tuple[np.ndarray, dict]:
    """Run the chain on a vector or a (batch, in_dim) matrix.

    Returns the output and a cache sufficient for the backward pass.
    """
    arr = np.asarray(x, dtype=float)
    was_1d = arr.ndim == 1
    a = arr[None, :] if was_1d else arr
    if a.shape[1] != params.in_dim:
        raise ValueError(f"input width {a.shape[1]} != expected {params.in_dim}")
    inputs = [a]
    pre = []
    last = len(params.weights) - 1
    for l, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = a @ w.T + b
        pre.append(z)
        a = z if l == last else np.maximum(z, 0.0)
        inputs.append(a)
    out = a[0] if was_1d else a
    return out, {"inputs": inputs, "pre": pre, "was_1d": was_1d}


def mlp_backward(params: MlpParams, cache: dict, output_grad) -> tuple[MlpParams, np.ndarray]:
    """Exact reverse-mode gradients of mlp_forward.

    Returns gradients in MlpParams layout plus the gradient w.r.t. the input.
    """
    g = np.asarray(output_grad, dtype=float)
    if cache["was_1d"]:
        g = g[None, :]
    if g.shape != cache["pre"][-1].shape:
        raise ValueError(f"output_grad shape {g.shape} != forward output {cache['pre'][-1].shape}")
    grads = mlp_zeros_like(params)
    last = len(params.weights) - 1
    for l in range(last, -1, -1):
        gz = g if l == last else g * (cache["pre"][l] > 0)
        grads.weights[l][:] = gz.T @ cache["inputs"][l]
        grads.biases[l][:] = gz.sum(axis=0)
        g = gz @ params.weights[l]
    return grads, (g[0] if cache["was_1d"] else g)


# ---------------------------------------------------------------------------
# parameter containers


def surrogate_feature_width(cfg: HeadConfig) -> int:
    return cfg.detector_feature_width or (3 * cfg.control_points + 1)


TRAFFIC_INPUT_WIDTH = 4 + NUM_CATEGORIES + 1  # box corners, one-hot category, confidence


def init_params(cfg: HeadConfig) -> TopoHeadParams:
    rng = np.random.default_rng(cfg.seed)
    c, h = cfg.feature_dim, cfg.mlp_hidden
    m3 = 3 * cfg.control_points
    lt_in = c if cfg.lt_compose == "sum" else 2 * c
    return TopoHeadParams(
        config=cfg,
        coord_embedder=mlp_init([m3, h, c], rng),
        feat_embedder=mlp_init([surrogate_feature_width(cfg), h, c], rng),
        traffic_embedder=mlp_init([TRAFFIC_INPUT_WIDTH, h, c], rng),
        ll_head=mlp_init([2 * c, h, 1], rng),
        lt_head=mlp_init([lt_in, h, 1], rng),
    )


def zeros_like_params(params: TopoHeadParams) -> TopoHeadParams:
    return TopoHeadParams(params.config, *[mlp_zeros_like(m) for m in params.modules().values()])


def param_arrays(params: TopoHeadParams) -> list[np.ndarray]:
    """All learnable arrays in a fixed, documented order."""
    out = []
    for mlp in params.modules().values():
        for w, b in zip(mlp.weights, mlp.biases):
            out.append(w)
            out.append(b)
    return out


# ---------------------------------------------------------------------------
# embeddings and pairwise logits


def _lane_inputs(lanes: Sequence[PredLane], cfg: HeadConfig) -> tuple[np.ndarray, np.ndarray]:
    coords = np.stack([np.asarray(l.ctrl, dtype=float).reshape(-1) for l in lanes])
    coords = coords / cfg.coord_scale
    if cfg.detector_feature_width:
        for i, l in enumerate(lanes):
            if l.feature is None or np.asarray(l.feature).shape != (cfg.detector_feature_width,):
                raise ValueError(f"lane {i}: detector feature of width {cfg.detector_feature_width} required")
        feats = np.stack([np.asarray(l.feature, dtype=float) for l in lanes])
    else:
        scores = np.array([[l.class_score] for l in lanes], dtype=float)
        feats = np.hstack([coords, scores])
    return coords, feats


def traffic_input(te: TrafficElement) -> np.ndarray:
    """Concatenated box (normalized by image extent), one-hot category, confidence."""
    box = np.asarray(te.box, dtype=float)
    norm = box / np.array([IMAGE_WIDTH, IMAGE_HEIGHT, IMAGE_WIDTH, IMAGE_HEIGHT], dtype=float)
    onehot = np.zeros(NUM_CATEGORIES)
    onehot[te.category] = 1.0
    return np.concatenate([norm, onehot, [te.confidence]])


def embed_lane(lane: PredLane, params: TopoHeadParams) -> np.ndarray:
    """Sum of the coordinate embedding and the (detector or surrogate)
    feature embedding; output has width C."""
    feats, _ = embed_lanes([lane], params)
    return feats[0]


def embed_lanes(lanes: Sequence[PredLane], params: TopoHeadParams):
    cfg = params.config
    if not lanes:
        return np.zeros((0, cfg.feature_dim)), None
    coord_in, feat_in = _lane_inputs(lanes, cfg)
    coord_out, coord_cache = mlp_forward(params.coord_embedder, coord_in)
    feat_out, feat_cache = mlp_forward(params.feat_embedder, feat_in)
    return coord_out + feat_out, (coord_cache, feat_cache)


def embed_traffic(te: TrafficElement, params: TopoHeadParams) -> np.ndarray:
    feats, _ = embed_traffic_batch([te], params)
    return feats[0]


def embed_traffic_batch(elements: Sequence[TrafficElement], params: TopoHeadParams):
    if not elements:
        return np.zeros((0, params.config.feature_dim)), None
    x = np.stack([traffic_input(te) for te in elements])
    return mlp_forward(params.traffic_embedder, x)


def _ll_pair_input(lane_feats: np.ndarray) -> np.ndarray:
    n = lane_feats.shape[0]
    return np.hstack([np.repeat(lane_feats, n, axis=0), np.tile(lane_feats, (n, 1))])


def _lt_pair_input(lane_feats: np.ndarray, traffic_feats: np.ndarray, compose: str) -> np.ndarray:
    n, t = lane_feats.shape[0], traffic_feats.shape[0]
    if compose == "sum":
        return (lane_feats[:, None, :] + traffic_feats[None, :, :]).reshape(n * t, -1)
    return np.hstack([np.repeat(lane_feats, t, axis=0), np.tile(traffic_feats, (n, 1))])


def ll_logits(lane_feats: np.ndarray, params: TopoHeadParams):
    """Pairwise lane-lane logits, entry (i, j) = head([feat_i || feat_j]).

    The diagonal is computed but callers exclude it from loss and metrics.
    """
    n = lane_feats.shape[0]
    if n == 0:
        return np.zeros((0, 0)), None
    z = _ll_pair_input(lane_feats)
    out, cache = mlp_forward(params.ll_head, z)
    return out.reshape(n, n), cache


def lt_logits(lane_feats: np.ndarray, traffic_feats: np.ndarray, params: TopoHeadParams):
    """Pairwise lane-traffic logits over the composed (sum or concat) features."""
    n, t = lane_feats.shape[0], traffic_feats.shape[0]
    if n == 0 or t == 0:
        return np.zeros((n, t)), None
    z = _lt_pair_input(lane_feats, traffic_feats, params.config.lt_compose)
    out, cache = mlp_forward(params.lt_head, z)
    return out.reshape(n, t), cache


def project_labels(
    lane_assignment: assoc.Assignment,
    traffic_assignment: assoc.Assignment,
    scene: SceneRecord,
    n: int,
    t: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Project GT adjacency onto prediction indices through the matchings.

    Entry (i, j) of the lane-lane labels is 1 iff both predictions matched
    and their GT lanes form an edge; lane-traffic analogous. Rows/columns
    of unmatched predictions stay all-zero.
    """
    lane_id = {idx: lane.id for idx, lane in enumerate(scene.lanes)}
    traffic_id = {idx: te.id for idx, te in enumerate(scene.traffic)}
    for p, g in lane_assignment.pairs.items():
        if not (0 <= p < n) or g not in lane_id:
            raise IndexError(f"lane assignment ({p} -> {g}) out of range")
    for p, g in traffic_assignment.pairs.items():
        if not (0 <= p < t) or g not in traffic_id:
            raise IndexError(f"traffic assignment ({p} -> {g}) out of range")
    ll = np.zeros((n, n))
    lt = np.zeros((n, t))
    for i, gi in lane_assignment.pairs.items():
        for j, gj in lane_assignment.pairs.items():
            if i != j and (lane_id[gi], lane_id[gj]) in scene.topo_ll:
                ll[i, j] = 1.0
        for k, gk in traffic_assignment.pairs.items():
            if (lane_id[gi], traffic_id[gk]) in scene.topo_lt:
                lt[i, k] = 1.0
    return ll, lt


# ---------------------------------------------------------------------------
# optimizer


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]

    @classmethod
    def zeros(cls, params: TopoHeadParams) -> "AdamState":
        arrays = param_arrays(params)
        return cls([np.zeros_like(a) for a in arrays], [np.zeros_like(a) for a in arrays])


def adamw_step(
    params: TopoHeadParams,
    grads: TopoHeadParams,
    state: AdamState,
    step_index: int,
    cfg: HeadConfig,
) -> tuple[TopoHeadParams, AdamState]:
    """Decoupled-weight-decay Adam update with bias correction (in place).

    ``step_index`` is 1-based.
    """
    if step_index < 1:
        raise ValueError("step_index is 1-based")
    b1, b2 = cfg.adam_beta1, cfg.adam_beta2
    c1 = 1.0 - b1**step_index
    c2 = 1.0 - b2**step_index
    for p, g, m, v in zip(param_arrays(params), param_arrays(grads), state.m, state.v):
        if p.shape != g.shape:
            raise ValueError(f"parameter/gradient shape mismatch: {p.shape} vs {g.shape}")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p *= 1.0 - cfg.lr * cfg.weight_decay
        p -= cfg.lr * (m / c1) / (np.sqrt(v / c2) + cfg.adam_eps)
    return params, state


# ---------------------------------------------------------------------------
# full-scene loss, training and inference


def scene_loss_and_grads(
    detection: DetectionRecord,
    scene: SceneRecord,
    params: TopoHeadParams,
    cost_cfg: assoc.CostConfig | None = None,
    compute_grads: bool = True,
):
    """Focal-loss objective of one scene and its parameter gradients.

    The loss is the mean focal loss over all off-diagonal lane-lane pairs
    plus the mean over all lane-traffic pairs, with labels projected from
    the GT through optimal matching.
    """
    cfg = params.config
    n, t = len(detection.lanes), len(detection.traffic)
    lane_feats, lane_cache = embed_lanes(detection.lanes, params)
    traffic_feats, traffic_cache = embed_traffic_batch(detection.traffic, params)
    ll_z, ll_cache = ll_logits(lane_feats, params)
    lt_z, lt_cache = lt_logits(lane_feats, traffic_feats, params)

    lane_assign = assoc.match_for_training(detection.lanes, scene.lanes, cost_cfg)
    traffic_assign = assoc.match_traffic_for_training(detection.traffic, scene.traffic, cost_cfg)
    ll_labels, lt_labels = project_labels(lane_assign, traffic_assign, scene, n, t)

    off_diag = ~np.eye(n, dtype=bool) if n else np.zeros((0, 0), dtype=bool)
    n_ll = int(off_diag.sum())
    n_lt = n * t

    ll_loss_terms, ll_grad_terms = focal_loss(stable_sigmoid(ll_z), ll_labels, cfg.focal_alpha, cfg.focal_gamma)
    lt_loss_terms, lt_grad_terms = focal_loss(stable_sigmoid(lt_z), lt_labels, cfg.focal_alpha, cfg.focal_gamma)
    loss_ll = float(ll_loss_terms[off_diag].mean()) if n_ll else 0.0
    loss_lt = float(lt_loss_terms.mean()) if n_lt else 0.0

    if not compute_grads:
        return loss_ll, loss_lt, None

    grads = zeros_like_params(params)
    dfeat_lanes = np.zeros_like(lane_feats)
    dfeat_traffic = np.zeros_like(traffic_feats)

    if n_ll:
        dll = np.where(off_diag, ll_grad_terms, 0.0) / n_ll
        head_grads, dz = mlp_backward(params.ll_head, ll_cache, dll.reshape(n * n, 1))
        _accumulate(grads.ll_head, head_grads)
        c = cfg.feature_dim
        dfeat_lanes += dz[:, :c].reshape(n, n, c).sum(axis=1)
        dfeat_lanes += dz[:, c:].reshape(n, n, c).sum(axis=0)
    if n_lt:
        dlt = lt_grad_terms / n_lt
        head_grads, dz = mlp_backward(params.lt_head, lt_cache, dlt.reshape(n * t, 1))
        _accumulate(grads.lt_head, head_grads)
        c = cfg.feature_dim
        if cfg.lt_compose == "sum":
            dz3 = dz.reshape(n, t, c)
            dfeat_lanes += dz3.sum(axis=1)
            dfeat_traffic += dz3.sum(axis=0)
        else:
            dfeat_lanes += dz[:, :c].reshape(n, t, c).sum(axis=1)
            dfeat_traffic += dz[:, c:].reshape(n, t, c).sum(axis=0)

    if n and lane_cache is not None:
        coord_cache, feat_cache = lane_cache
        g, _ = mlp_backward(params.coord_embedder, coord_cache, dfeat_lanes)
        _accumulate(grads.coord_embedder, g)
        g, _ = mlp_backward(params.feat_embedder, feat_cache, dfeat_lanes)
        _accumulate(grads.feat_embedder, g)
    if t and traffic_cache is not None:
        g, _ = mlp_backward(params.traffic_embedder, traffic_cache, dfeat_traffic)
        _accumulate(grads.traffic_embedder, g)
    return loss_ll, loss_lt, grads


def _accumulate(target: MlpParams, extra: MlpParams) -> None:
    for tw, ew in zip(target.weights, extra.weights):
        tw += ew
    for tb, eb in zip(target.biases, extra.biases):
        tb += eb


def _pair_by_scene_id(scenes, detections, what: str):
    by_id = {d.scene_id: d for d in detections}
    missing = [s.scene_id for s in scenes if s.scene_id not in by_id]
    if missing:
        raise ValueError(f"{what}: detections missing for scenes {missing}")
    return [(s, by_id[s.scene_id]) for s in scenes]


def train(
    train_scenes: Sequence[SceneRecord],
    train_detections: Sequence[DetectionRecord],
    val_scenes: Sequence[SceneRecord] = (),
    val_detections: Sequence[DetectionRecord] = (),
    cfg: HeadConfig | None = None,
    cost_cfg: assoc.CostConfig | None = None,
) -> tuple[TopoHeadParams, TrainStats]:
    """Train both heads with one AdamW step per scene.

    Deterministic given ``cfg.seed``: seeded init, one seeded scene
    permutation reused by every epoch.
    """
    cfg = cfg or HeadConfig()
    if not train_scenes:
        raise ValueError("training set is empty")
    pairs = _pair_by_scene_id(train_scenes, train_detections, "train")
    val_pairs = _pair_by_scene_id(val_scenes, val_detections, "val") if val_scenes else []

    params = init_params(cfg)
    state = AdamState.zeros(params)
    order = np.random.default_rng(cfg.seed).permutation(len(pairs))
    stats = TrainStats()
    t_start = time.perf_counter()
    step = 0
    for epoch in range(cfg.epochs):
        losses_ll, losses_lt, norms = [], [], []
        for idx in order:
            scene, det = pairs[idx]
            loss_ll, loss_lt, grads = scene_loss_and_grads(det, scene, params, cost_cfg)
            total = loss_ll + loss_lt
            if not np.isfinite(total):
                raise TrainingError(f"non-finite loss at epoch {epoch}, scene {scene.scene_id!r}")
            step += 1
            norms.append(float(np.sqrt(sum(float(np.sum(g * g)) for g in param_arrays(grads)))))
            adamw_step(params, grads, state, step, cfg)
            losses_ll.append(loss_ll)
            losses_lt.append(loss_lt)
        stats.epoch_loss_ll.append(float(np.mean(losses_ll)))
        stats.epoch_loss_lt.append(float(np.mean(losses_lt)))
        stats.epoch_loss_total.append(float(np.mean(losses_ll) + np.mean(losses_lt)))
        stats.epoch_grad_norm.append(float(np.mean(norms)))
        if val_pairs:
            vals = [
                sum(scene_loss_and_grads(d, s, params, cost_cfg, compute_grads=False)[:2])
                for s, d in val_pairs
            ]
            stats.val_loss_total.append(float(np.mean(vals)))
    stats.wall_clock_sec = time.perf_counter() - t_start
    return params, stats


def predict(detection: DetectionRecord, params: TopoHeadParams) -> tuple[np.ndarray, np.ndarray]:
    """Sigmoid probabilities for both edge spaces; the lane-lane diagonal
    (self-loops) is forced to zero."""
    lane_feats, _ = embed_lanes(detection.lanes, params)
    traffic_feats, _ = embed_traffic_batch(detection.traffic, params)
    ll_z, _ = ll_logits(lane_feats, params)
    lt_z, _ = lt_logits(lane_feats, traffic_feats, params)
    ll_p = stable_sigmoid(ll_z)
    np.fill_diagonal(ll_p, 0.0)
    return ll_p, stable_sigmoid(lt_z)


# ---------------------------------------------------------------------------
# persistence


def save_params(params: TopoHeadParams, path) -> None:
    obj = {
        "config": asdict(params.config),
        "modules": {
            name: [
                {"weight": w.tolist(), "bias": b.tolist()}
                for w, b in zip(mlp.weights, mlp.biases)
            ]
            for name, mlp in params.modules().items()
        },
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj) + "\n", encoding="utf-8")


def load_params(path) -> TopoHeadParams:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    cfg = HeadConfig(**obj["config"])
    mlps = {}
    for name, layers in obj["modules"].items():
        weights = [np.asarray(l["weight"], dtype=float) for l in layers]
        biases = [np.asarray(l["bias"], dtype=float) for l in layers]
        mlps[name] = MlpParams(weights, biases)  # validates dimension chaining
    params = TopoHeadParams(cfg, **mlps)
    expected = init_params(cfg)
    for name in expected.modules():
        got, want = params.modules()[name], expected.modules()[name]
        if [w.shape for w in got.weights] != [w.shape for w in want.weights]:
            raise ValueError(f"{name}: layer shapes do not match the configuration")
    return params


def save_stats(stats: TrainStats, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(asdict(stats), indent=2) + "\n", encoding="utf-8")
