"""Desk-scale trainer: small encoders + Adam on the alignment losses.

One encoder per modality projects raw features into the shared space;
the chosen alignment loss produces embedding gradients (see
``gradients``), which are chained into encoder parameters and applied
with Adam: bias correction, global-norm gradient clipping, decoupled
weight decay, and a step-decay learning-rate schedule (x0.1 every 100
epochs). Retrieval metrics are evaluated each epoch on a held-out
split. Everything is deterministic given the config seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, ShapeMismatch
from .gradients import LOSS_KINDS, loss_gradient
from .losses import MatchStrategy, ModalityRing, ring_edges
from .pmf import AlignConfig, EmbeddingBatch
from .retrieval import mean_average_precision, precision_at_k, rank_gallery


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-4
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    weight_decay: float = 1e-5
    grad_clip_norm: float = 1.0
    max_epochs: int = 100
    batch_size: int = 128
    seed: int = 0
    loss_kind: str = "gcs_ring"
    strategy: MatchStrategy = MatchStrategy.MIXED
    temperature: float = 1.0
    holdout_fraction: float = 0.2
    lr_decay_factor: float = 0.1
    lr_decay_every: int = 100
    hidden_dim: int | None = None
    init_scale: float = 0.02

    def __post_init__(self) -> None:
        if self.loss_kind not in LOSS_KINDS:
            raise ConfigError(f"unknown loss kind {self.loss_kind!r}")
        for name in ("adam_beta1", "adam_beta2"):
            value = getattr(self, name)
            if not (0.0 <= value < 1.0):
                raise ConfigError(f"{name} must lie in [0, 1), got {value}")
        for name in ("learning_rate", "weight_decay", "holdout_fraction"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        if self.max_epochs < 1 or self.batch_size < 2:
            raise ConfigError("need max_epochs >= 1 and batch_size >= 2")


class Encoder:
    """Affine projection head, optionally with one tanh hidden layer."""

    def __init__(
        self,
        input_dim: int,
        embed_dim: int,
        hidden_dim: int | None = None,
        *,
        rng: np.random.Generator,
        init_scale: float = 0.02,
    ):
        dims = [input_dim] + ([hidden_dim] if hidden_dim else []) + [embed_dim]
        self.weights = [
            rng.normal(size=(dims[i], dims[i + 1])) * init_scale
            for i in range(len(dims) - 1)
        ]
        self.biases = [np.zeros(dims[i + 1]) for i in range(len(dims) - 1)]

    def parameters(self) -> list[np.ndarray]:
        params: list[np.ndarray] = []
        for w, b in zip(self.weights, self.biases):
            params.extend((w, b))
        return params

    def forward(self, x: np.ndarray):
        activations = [np.asarray(x, dtype=np.float64)]
        for layer, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = activations[-1] @ w + b
            if layer < len(self.weights) - 1:
                z = np.tanh(z)
            activations.append(z)
        return activations[-1], activations

    def backward(self, activations: list[np.ndarray], grad_out: np.ndarray):
        """Parameter gradients in the order of :meth:`parameters`."""
        grads: list[np.ndarray] = []
        grad = grad_out
        for layer in reversed(range(len(self.weights))):
            x_in = activations[layer]
            if layer < len(self.weights) - 1:
                # tanh': upstream grad is wrt the activated output
                grad = grad * (1.0 - activations[layer + 1] ** 2)
            grads.insert(0, grad.sum(axis=0))  # bias
            grads.insert(0, x_in.T @ grad)  # weight
            if layer > 0:
                grad = grad @ self.weights[layer].T
        return grads


class Adam:
    """Adam with bias correction and decoupled weight decay.

    Parameters are updated in place; the decay term ``lr * wd * p`` is
    applied after the adaptive step, not mixed into the gradient.
    """

    def __init__(
        self,
        params: list[np.ndarray],
        learning_rate: float,
        beta1: float = 0.9,
        beta2: float = 0.999,
        epsilon: float = 1e-8,
        weight_decay: float = 0.0,
    ):
        self.params = params
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.weight_decay = weight_decay
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads: list[np.ndarray], lr_scale: float = 1.0) -> None:
        if len(grads) != len(self.params):
            raise ShapeMismatch(f"expected {len(self.params)} gradients, got {len(grads)}")
        self.t += 1
        lr = self.learning_rate * lr_scale
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= lr * (m / bc1) / (np.sqrt(v / bc2) + self.epsilon)
            if self.weight_decay:
                p -= lr * self.weight_decay * p


def clip_global_norm(grads: list[np.ndarray], max_norm: float | None):
    """Scale all gradients jointly so their global norm is <= max_norm."""
    total = float(np.sqrt(sum(float((g * g).sum()) for g in grads)))
    if max_norm is not None and max_norm > 0 and total > max_norm:
        scale = max_norm / total
        grads = [g * scale for g in grads]
    return grads, total


def build_encoders(
    input_dims: tuple[int, ...], embed_dim: int, cfg: TrainConfig
) -> list[Encoder]:
    """One seeded encoder per modality (stream ``[seed, index]``)."""
    return [
        Encoder(
            dim,
            embed_dim,
            cfg.hidden_dim,
            rng=np.random.default_rng([cfg.seed, i]),
            init_scale=cfg.init_scale,
        )
        for i, dim in enumerate(input_dims)
    ]


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    loss: float
    finite: bool
    metrics: dict[str, dict[str, float]]  # direction -> {"p1": ., "p10": .}


@dataclass(frozen=True)
class TrainingTrace:
    records: list[EpochRecord]
    aborted: bool
    directions: list[str]
    supervised: dict[str, bool]
    final_metrics: dict[str, dict[str, float]] = field(default_factory=dict)

    @property
    def losses(self) -> list[float]:
        return [r.loss for r in self.records]


def supervised_directions(
    names: list[str], loss_kind: str, strategy: MatchStrategy
) -> set[str]:
    """Direction labels that receive gradient under the given loss."""
    m = len(names)
    if loss_kind == "gcs_ring":
        edges: list[tuple[int, int]] = []
        if strategy in (MatchStrategy.CLOCKWISE, MatchStrategy.MIXED):
            edges += ring_edges(m, "forward")
        if strategy in (MatchStrategy.COUNTERCLOCKWISE, MatchStrategy.MIXED):
            edges += ring_edges(m, "backward")
        return {f"{names[s]}2{names[d]}" for s, d in edges}
    return {f"{names[s]}2{names[d]}" for s in range(m) for d in range(m) if s != d}


def _encode_split(
    encoders: list[Encoder], data: list[EmbeddingBatch], idx: np.ndarray
) -> list[EmbeddingBatch]:
    return [
        EmbeddingBatch(enc.forward(b.data[idx])[0], b.labels[idx], b.modality_name)
        for enc, b in zip(encoders, data)
    ]


def evaluate_directions(
    batches: list[EmbeddingBatch], with_map: bool = False
) -> dict[str, dict[str, float]]:
    """P@1 / P@10 (and optionally MAP) for every ordered modality pair."""
    metrics: dict[str, dict[str, float]] = {}
    for qi, query in enumerate(batches):
        for gi, gallery in enumerate(batches):
            if qi == gi:
                continue
            ranked = rank_gallery(query, gallery)
            entry = {
                "p1": precision_at_k(ranked, query.labels, gallery.labels, 1),
                "p10": precision_at_k(
                    ranked, query.labels, gallery.labels, min(10, gallery.n)
                ),
            }
            if with_map:
                entry["map"] = mean_average_precision(ranked, query.labels, gallery.labels)
            metrics[f"{query.modality_name}2{gallery.modality_name}"] = entry
    return metrics


def train_run(
    data: list[EmbeddingBatch], encoders: list[Encoder], cfg: TrainConfig
) -> TrainingTrace:
    """Train the encoders on the configured loss; return the full trace.

    Rows are shuffled per epoch without replacement (seeded); a
    non-finite batch loss aborts the run, returning the trace so far
    with ``aborted=True``.
    """
    if len(data) != len(encoders):
        raise ShapeMismatch(f"{len(data)} modalities but {len(encoders)} encoders")
    names = [b.modality_name for b in data]
    labels = data[0].labels
    align_cfg = AlignConfig(cfg.temperature)
    rng = np.random.default_rng(cfg.seed)

    n = data[0].n
    perm = rng.permutation(n)
    n_test = min(max(2, int(round(cfg.holdout_fraction * n))), n - 2)
    test_idx, train_idx = perm[:n_test], perm[n_test:]

    adam = Adam(
        [p for enc in encoders for p in enc.parameters()],
        cfg.learning_rate,
        cfg.adam_beta1,
        cfg.adam_beta2,
        cfg.adam_epsilon,
        cfg.weight_decay,
    )
    directions = sorted(
        f"{q}2{g}" for q in names for g in names if q != g
    )
    supervised = {
        d: d in supervised_directions(names, cfg.loss_kind, cfg.strategy)
        for d in directions
    }

    records: list[EpochRecord] = []
    aborted = False
    for epoch in range(cfg.max_epochs):
        lr_scale = cfg.lr_decay_factor ** (epoch // cfg.lr_decay_every)
        order = train_idx[rng.permutation(train_idx.size)]
        batch_losses: list[float] = []
        for start in range(0, order.size, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            if idx.size < 2:
                continue
            ring_batches = []
            caches = []
            for enc, batch in zip(encoders, data):
                emb, cache = enc.forward(batch.data[idx])
                ring_batches.append(EmbeddingBatch(emb, labels[idx], batch.modality_name))
                caches.append(cache)
            ring = ModalityRing(tuple(ring_batches), cfg.strategy)
            value, bundle = loss_gradient(cfg.loss_kind, ring, align_cfg)
            if not np.isfinite(value):
                batch_losses.append(value)
                aborted = True
                break
            param_grads: list[np.ndarray] = []
            for enc, cache, grad_emb in zip(encoders, caches, bundle):
                param_grads.extend(enc.backward(cache, grad_emb))
            clipped, _ = clip_global_norm(param_grads, cfg.grad_clip_norm)
            adam.step(clipped, lr_scale)
            batch_losses.append(value)
        epoch_loss = float(np.mean(batch_losses)) if batch_losses else float("nan")
        metrics = evaluate_directions(_encode_split(encoders, data, test_idx))
        records.append(
            EpochRecord(epoch, epoch_loss, bool(np.isfinite(epoch_loss)), metrics)
        )
        if aborted:
            break
    final = evaluate_directions(_encode_split(encoders, data, test_idx), with_map=True)
    return TrainingTrace(records, aborted, directions, supervised, final)


@dataclass(frozen=True)
class AblationArm:
    strategy: str
    trace: TrainingTrace
    avg_p1: float
    avg_p10: float


def ablation_run(
    data: list[EmbeddingBatch], base_cfg: TrainConfig, embed_dim: int = 16
) -> list[AblationArm]:
    """Train one arm per matching strategy under identical budgets.

    Each arm gets freshly built encoders from the same seed, so initial
    parameters, data split, and batch order are shared; only the
    strategy differs. Unsupervised directions stay visible in each
    trace's ``supervised`` map.
    """
    input_dims = tuple(b.d for b in data)
    arms = []
    for strategy in (
        MatchStrategy.CLOCKWISE,
        MatchStrategy.COUNTERCLOCKWISE,
        MatchStrategy.MIXED,
    ):
        cfg = replace(base_cfg, strategy=strategy)
        encoders = build_encoders(input_dims, embed_dim, cfg)
        trace = train_run(data, encoders, cfg)
        p1 = [m["p1"] for m in trace.final_metrics.values()]
        p10 = [m["p10"] for m in trace.final_metrics.values()]
        arms.append(
            AblationArm(strategy.value, trace, float(np.mean(p1)), float(np.mean(p10)))
        )
    return arms
