"""Supervised losses, the training loop, and evaluation metrics."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import grounder
from .grounder import ModelParams, UpdateType
from .language import wrap_angle
from .mapmodel import gather_area_weights
from .nnet import AdamState, NnetError, Tensor, as_tensor, constant, log_softmax

log = logging.getLogger(__name__)

ANGLE_MARGIN = math.pi / 8  # 22.5 degree tolerance on directions
AREA_LOSS_CAP = 50.0


@dataclass
class TrainConfig:
    learning_rate: float = 1e-4
    epochs: int = 10
    holdout: float = 0.10
    seed: int = 0
    weight_type: float = 1.0
    weight_alpha: float = 1.0
    weight_kappa: float = 1.0
    weight_area: float = 1.0
    use_area_loss: bool = True  # ablation flag: drop the area term entirely when False
    hidden: int = 8
    lam: float = 0.5
    rho: float = 1.0
    eps: float = 1e-3

    def __post_init__(self):
        if not (0 < self.holdout < 1):
            raise ValueError("holdout must be in (0, 1)")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")

    @classmethod
    def from_json(cls, path):
        with open(path) as f:
            return cls(**json.load(f))


@dataclass
class EvalReport:
    type_accuracy: float
    area_top1_accuracy: float | None  # None when no precise samples present
    direction_accuracy: float | None  # None when no alpha labels present
    kappa_accuracy: float | None
    mean_losses: dict = field(default_factory=dict)
    n_samples: int = 0

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=1)

    def to_text(self) -> str:
        def fmt(v):
            return "n/a" if v is None else f"{v:.4f}"

        lines = [
            f"samples                {self.n_samples}",
            f"type accuracy          {fmt(self.type_accuracy)}",
            f"precise area top-1     {fmt(self.area_top1_accuracy)}",
            f"direction within 22.5  {fmt(self.direction_accuracy)}",
            f"kappa accuracy         {fmt(self.kappa_accuracy)}",
        ]
        for name, v in self.mean_losses.items():
            if isinstance(v, (int, float)):
                lines.append(f"mean {name:<17} {fmt(v)}")
        return "\n".join(lines)


# -- losses ---------------------------------------------------------------


def loss_type(modifier, type_label, params) -> Tensor:
    """Cross entropy of the 4-way type classifier."""
    logp = log_softmax(grounder.classifier_logits(modifier, params))
    return -logp.pick(int(type_label))


def loss_alpha(alpha, alpha_star) -> Tensor:
    """Marginal squared loss on the wrapped angle difference.

    Zero inside the 22.5-degree margin ball; the wrap makes labels near
    +/- pi trainable. One escape hatch: the prediction head (tanh * pi)
    lives on an interval, so when the short arc to the label crosses the
    +/- pi boundary (|difference| > pi) and the wrapped error is not
    already small, the unwrapped difference is penalized instead --
    otherwise predictions for targets like -3pi/4 saturate against the
    boundary and can never come back.
    """
    alpha = as_tensor(alpha)
    a_star = wrap_angle(float(alpha_star))
    d = wrap_angle(float(alpha.value)) - a_star
    dw = wrap_angle(d)
    # boundary-hugging targets (the "west" cluster) always wrap; interior
    # targets whose short arc crosses +/- pi take the direct difference
    use_direct = abs(d) > math.pi and abs(a_star) < math.pi - ANGLE_MARGIN
    shift = 0.0 if use_direct else d - dw  # multiple of 2*pi, constant
    base_shift = float(alpha.value) - wrap_angle(float(alpha.value))
    diff = alpha - base_shift - a_star - shift
    return (diff * diff - ANGLE_MARGIN**2).relu()


def loss_kappa(modifier, kappa_star, params) -> Tensor:
    """Binary cross entropy on the sigmoid direction-indicator head."""
    if kappa_star not in (0, 1):
        raise ValueError("kappa label must be 0 or 1")
    logit = grounder.kappa_logit_tensor(modifier, params)
    # -log sigmoid(z) = softplus(-z) = relu(-z) + log(1 + exp(-|z|))
    z = logit if kappa_star == 1 else -logit
    abs_z = z.relu() + (-z).relu()
    return (-z).relu() + ((abs_z * -1.0).exp() + 1.0).log()


def loss_area(sample, amap, params) -> Tensor:
    """Negative log posterior weight of the gold area under the precise update.

    Gradient reaches the direction/indicator/shape heads through gamma;
    attention and prior weights are constants.
    """
    if sample.target_area is None or sample.prior is None:
        raise ValueError("area loss requires a precise sample with prior and target")
    w_prev, _ = gather_area_weights(sample.prior, amap)
    w_bar, _ = grounder.attention_weights(amap, sample.modifier, params)
    kappa_t, beta_t = grounder.kappa_beta_tensors(sample.modifier, params)
    alpha_t = grounder.direction_tensor(sample.modifier, params)
    gamma = grounder.gamma_tensor(amap, alpha_t, kappa_t, beta_t, params.eps)
    w = gamma * constant(w_bar * w_prev)
    idx = amap.area_index(sample.target_area)
    if w_bar[idx] * w_prev[idx] <= 0:
        log.warning("gold area %s has zero attention x prior weight; clipping "
                    "area loss", sample.target_area)
        return constant(AREA_LOSS_CAP)
    return w.sum().log() - w.pick(idx).log()


def sample_loss(sample, amap, params, config) -> Tensor:
    """Sum of the supervised terms applicable to the sample's update type."""
    total = config.weight_type * loss_type(sample.modifier, sample.type_label, params)
    t = sample.type_label
    if t == UpdateType.DIRECTIONAL:
        alpha_t = grounder.direction_tensor(sample.modifier, params)
        total = total + config.weight_alpha * loss_alpha(alpha_t, sample.alpha)
    elif t == UpdateType.PRECISE:
        if sample.kappa == 1 and sample.alpha is not None:
            alpha_t = grounder.direction_tensor(sample.modifier, params)
            total = total + config.weight_alpha * loss_alpha(alpha_t, sample.alpha)
        total = total + config.weight_kappa * loss_kappa(
            sample.modifier, sample.kappa, params
        )
        if config.use_area_loss:
            total = total + config.weight_area * loss_area(sample, amap, params)
    return total


# -- training loop --------------------------------------------------------


def split_holdout(samples, config):
    """Deterministic shuffle and split; returns (train, holdout)."""
    rng = np.random.default_rng(config.seed)
    order = rng.permutation(len(samples))
    n_hold = max(1, int(round(len(samples) * config.holdout)))
    hold = [samples[i] for i in order[:n_hold]]
    train = [samples[i] for i in order[n_hold:]]
    return train, hold


def train(samples, amap, config: TrainConfig, lexicon=None):
    """Train fresh ModelParams on the dataset; returns (params, report).

    Per-sample Adam updates for a fixed number of epochs; the holdout
    fraction is withheld for the returned EvalReport.
    """
    if not samples:
        raise ValueError("dataset is empty")
    if lexicon is None:
        raise ValueError("a lexicon is required to build ModelParams")
    params = ModelParams(lexicon, hidden=config.hidden, lam=config.lam,
                         rho=config.rho, eps=config.eps, seed=config.seed)
    train_set, holdout = split_holdout(samples, config)
    adam = AdamState(params.parameters(), lr=config.learning_rate)
    rng = np.random.default_rng(config.seed + 1)

    epoch_losses = []
    for epoch in range(config.epochs):
        order = rng.permutation(len(train_set))
        running = 0.0
        for sid in order:
            sample = train_set[sid]
            adam.zero_grad()
            loss = sample_loss(sample, amap, params, config)
            value = loss.item()
            if not math.isfinite(value):
                raise NnetError(f"non-finite loss on sample {sid} (epoch {epoch})")
            loss.backward()
            adam.step()
            running += value
        epoch_losses.append(running / len(train_set))
        log.info("epoch %d mean loss %.4f", epoch, epoch_losses[-1])
    params.sync_lexicon()
    report = evaluate(params, holdout, amap)
    report.mean_losses["train_per_epoch"] = epoch_losses
    return params, report


def evaluate(params, samples, amap) -> EvalReport:
    """Type accuracy overall; area top-1 on precise; direction tolerance."""
    type_hits = 0
    area_hits, area_total = 0, 0
    dir_hits, dir_total = 0, 0
    kappa_hits, kappa_total = 0, 0
    losses = {"type": 0.0}
    for s in samples:
        predicted = grounder.classify_modifier(s.modifier, params)
        type_hits += int(predicted == s.type_label)
        losses["type"] += loss_type(s.modifier, s.type_label, params).item()
        if s.alpha is not None and s.type_label in (UpdateType.DIRECTIONAL,
                                                    UpdateType.PRECISE):
            if not (s.type_label == UpdateType.PRECISE and s.kappa == 0):
                pred = grounder.predict_direction(s.modifier, params)
                dir_total += 1
                dir_hits += int(abs(wrap_angle(pred - s.alpha)) <= ANGLE_MARGIN)
        if s.type_label == UpdateType.PRECISE:
            if s.kappa is not None:
                kappa, _ = grounder.predict_kappa_beta(s.modifier, params)
                kappa_total += 1
                kappa_hits += int(round(kappa) == s.kappa)
            if s.target_area is not None and s.prior is not None:
                w = grounder.precise_weights(s.modifier, s.prior, amap, params)
                order = sorted(range(amap.n_areas),
                               key=lambda i: (-w[i], amap.areas[i].id))
                area_total += 1
                area_hits += int(amap.areas[order[0]].id == s.target_area)
    n = len(samples)
    return EvalReport(
        type_accuracy=type_hits / n if n else 0.0,
        area_top1_accuracy=area_hits / area_total if area_total else None,
        direction_accuracy=dir_hits / dir_total if dir_total else None,
        kappa_accuracy=kappa_hits / kappa_total if kappa_total else None,
        mean_losses={"type": losses["type"] / n} if n else {},
        n_samples=n,
    )


@dataclass
class BenchmarkRow:
    steps: int
    n_queries: int
    top1: float
    top5: float


def benchmark_composite(queries, amap, params):
    """Ground each (instruction, gold) query; bucket Top1/Top5 by chain length.

    Parse or grounding failures count as misses in their bucket (bucketed
    by intended step count when the chain could not be built).
    """
    buckets = {}
    for instruction, gold in queries:
        try:
            trace = grounder.ground(instruction, amap, params)
            steps = len(trace.steps)
            top1 = trace.top_k_areas(1)
            top5 = trace.top_k_areas(5)
        except Exception:
            log.warning("query failed to ground: %r", instruction)
            steps, top1, top5 = 0, [], []
        hit1 = int(gold in top1)
        hit5 = int(gold in top5)
        n, h1, h5 = buckets.get(steps, (0, 0, 0))
        buckets[steps] = (n + 1, h1 + hit1, h5 + hit5)
    rows = []
    for steps in sorted(buckets):
        n, h1, h5 = buckets[steps]
        rows.append(BenchmarkRow(steps, n, 100.0 * h1 / n, 100.0 * h5 / n))
    total = sum(b[0] for b in buckets.values())
    h1 = sum(b[1] for b in buckets.values())
    h5 = sum(b[2] for b in buckets.values())
    rows.append(BenchmarkRow(-1, total, 100.0 * h1 / total, 100.0 * h5 / total))
    return rows


def benchmark_table(rows) -> str:
    lines = ["steps  queries  top1%   top5%"]
    for r in rows:
        label = "any" if r.steps == -1 else str(r.steps)
        lines.append(f"{label:<6} {r.n_queries:<8} {r.top1:<7.2f} {r.top5:<7.2f}")
    return "\n".join(lines)
