"""Modifier-type classifier, learned heads, and the four belief updates.

Each modifier of a destination phrase is classified as dummy, proximity,
directional, or precise, and the matching update function transforms the
current belief grid. Folding the updates over the parsed modifier chain
grounds a full instruction to a ranked list of areas.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from . import nnet
from .language import ARTICLES, Lexicon, parse_modifier_chain, extract_destination
from .mapmodel import (
    AreaMap,
    BeliefGrid,
    dummy_prior,
    gather_area_weights,
    gaussian_grid,
    scatter_area_weights,
)
from .nnet import GruEncoder, LinearHead, Tensor, constant, parameter


class UpdateType(IntEnum):
    DUMMY = 0
    PROXIMITY = 1
    DIRECTIONAL = 2
    PRECISE = 3


class GroundingError(Exception):
    """A belief update degenerated; carries the failing step when known."""

    def __init__(self, message, kind="degenerate", step=None):
        super().__init__(message)
        self.kind = kind
        self.step = step


# prior is "precise" when the dominant area holds this many times the
# runner-up's mass; otherwise fall back to the belief mean / entropy size
DOMINANCE_RATIO = 1.5


class ModelParams:
    """All learnable state plus hyperparameters; immutable at inference."""

    def __init__(self, lexicon: Lexicon, hidden=8, lam=0.5, rho=1.0, eps=1e-3,
                 seed=0):
        self.lexicon = lexicon
        self.hidden = hidden
        self.lam = lam
        self.rho = rho
        self.eps = eps
        self.seed = seed
        if not (0 < lam < 1):
            raise ValueError("match threshold lam must be in (0, 1)")
        if rho <= 0 or eps <= 0:
            raise ValueError("rho and eps must be > 0")

        rng = np.random.default_rng(seed)
        width = lexicon.trainable_embeddings.shape[1]
        self.embed = parameter(lexicon.trainable_embeddings.copy(), "embed")
        self.cls_gru = GruEncoder(width, hidden, rng)
        self.cls_head = LinearHead(hidden, 4, rng)
        self.dir_gru = GruEncoder(width, hidden, rng)
        self.dir_head = LinearHead(hidden, 1, rng)
        self.ind_gru = GruEncoder(width, hidden, rng)
        self.kappa_head = LinearHead(hidden, 1, rng)
        self.beta_head = LinearHead(hidden, 1, rng)

    def parameters(self):
        params = [self.embed]
        for block in (self.cls_gru, self.cls_head, self.dir_gru, self.dir_head,
                      self.ind_gru, self.kappa_head, self.beta_head):
            params += block.parameters()
        return params

    def sync_lexicon(self):
        """Publish the trained embedding table back into the lexicon."""
        self.lexicon = self.lexicon.with_trainable(self.embed.value.copy())

    # -- persistence -------------------------------------------------------

    def save(self, path):
        blocks = {
            "cls_gru": self.cls_gru, "cls_head": self.cls_head,
            "dir_gru": self.dir_gru, "dir_head": self.dir_head,
            "ind_gru": self.ind_gru, "kappa_head": self.kappa_head,
            "beta_head": self.beta_head,
        }
        doc = {
            "format": "groundnav-model-v1",
            "hyper": {"hidden": self.hidden, "lam": self.lam, "rho": self.rho,
                      "eps": self.eps, "seed": self.seed},
            "vocabulary": self.lexicon.vocabulary,
            "match_embeddings": self.lexicon.match_embeddings.tolist(),
            "trainable_embeddings": self.embed.value.tolist(),
            "weights": {name: b.state() for name, b in blocks.items()},
        }
        with open(path, "w") as f:
            json.dump(doc, f)

    @classmethod
    def load(cls, path):
        with open(path) as f:
            doc = json.load(f)
        if doc.get("format") != "groundnav-model-v1":
            raise ValueError("unrecognized model file format")
        h = doc["hyper"]
        lex = Lexicon(doc["vocabulary"], doc["match_embeddings"],
                      doc["trainable_embeddings"])
        params = cls(lex, hidden=h["hidden"], lam=h["lam"], rho=h["rho"],
                     eps=h["eps"], seed=h["seed"])
        params.embed.value = np.asarray(doc["trainable_embeddings"], dtype=float)
        for name, state in doc["weights"].items():
            getattr(params, name).load_state(state)
        return params


def _embed_sequence(params: ModelParams, modifier):
    return [params.embed.row(i) for i in modifier.indices]


def classifier_logits(modifier, params: ModelParams) -> Tensor:
    h = params.cls_gru(_embed_sequence(params, modifier))
    return params.cls_head(h)


def classify_modifier(modifier, params: ModelParams) -> UpdateType:
    """Argmax over the softmax type head; ties break to the lower type."""
    logits = classifier_logits(modifier, params).value
    return UpdateType(int(np.argmax(logits)))


def direction_tensor(modifier, params: ModelParams) -> Tensor:
    # reversed reading: the leading direction adjective lands last, where
    # the final hidden state is most sensitive
    h = params.dir_gru(_embed_sequence(params, modifier)[::-1])
    return params.dir_head(h).pick(0).tanh() * math.pi


def predict_direction(modifier, params: ModelParams) -> float:
    """Predicted direction angle in (-pi, pi); 0 = east, pi/2 = north."""
    return direction_tensor(modifier, params).item()


def kappa_logit_tensor(modifier, params: ModelParams) -> Tensor:
    h = params.ind_gru(_embed_sequence(params, modifier)[::-1])
    return params.kappa_head(h).pick(0)


def kappa_beta_tensors(modifier, params: ModelParams):
    h = params.ind_gru(_embed_sequence(params, modifier)[::-1])
    kappa = params.kappa_head(h).pick(0).sigmoid()
    beta = params.beta_head(h).pick(0).exp()
    return kappa, beta


def predict_kappa_beta(modifier, params: ModelParams):
    kappa, beta = kappa_beta_tensors(modifier, params)
    return kappa.item(), beta.item()


# -- update functions ------------------------------------------------------


def dummy_update(modifier, belief: BeliefGrid) -> BeliefGrid:
    return belief


def reduce_prior(belief: BeliefGrid, amap: AreaMap):
    """Center and size of the prior for the Gaussian heuristics.

    A precise prior yields its dominant area's centroid and size. If no
    area dominates (max below DOMINANCE_RATIO x runner-up), falls back to
    the belief mean and an effective size of cell_area * exp(entropy).
    """
    w, degenerate = gather_area_weights(belief, amap)
    if not degenerate:
        order = np.argsort(-w, kind="stable")
        top = order[0]
        if amap.n_areas == 1 or w[top] >= DOMINANCE_RATIO * w[order[1]]:
            area = amap.areas[top]
            return np.asarray(area.centroid), area.size
    cell_area = amap.resolution**2
    return belief.mean_point(amap), cell_area * math.exp(belief.entropy())


def proximity_update(modifier, belief, amap, params) -> BeliefGrid:
    """Gaussian around the prior, variance rho * prior-area size per axis."""
    center, size = reduce_prior(belief, amap)
    return gaussian_grid(amap, center, params.rho * size)


def directional_update(modifier, belief, amap, params, alpha=None) -> BeliefGrid:
    """Half-plane-masked Gaussian in the predicted compass direction.

    Cells with cos(x - center, e_alpha) <= 0 are zeroed; alpha may be
    forced (used by the data generator), otherwise it comes from the
    direction head.
    """
    if alpha is None:
        alpha = predict_direction(modifier, params)
    center, size = reduce_prior(belief, amap)
    base = gaussian_grid(amap, center, params.rho * size)
    e = np.array([math.cos(alpha), math.sin(alpha)])
    keep = (amap.cell_centers - center) @ e > 0
    masked = np.where(keep, base.flat, 0.0)
    if masked.sum() <= 0:
        raise GroundingError(
            f"directional mask removed all belief mass (alpha={alpha:.3f})",
            kind="degenerate-mask",
        )
    return BeliefGrid.from_unnormalized(amap.width, amap.height, masked)


def _normalized_geometry(amap: AreaMap):
    centroids = np.array([amap.normalized_point(a.centroid) for a in amap.areas])
    return centroids, amap.normalized_boundary()


def gamma_factor(amap, alpha, kappa, beta, eps) -> np.ndarray:
    """Directional scaling factor per area (numeric evaluation).

    gamma(i) = (sigmoid(p_i - min_p) + 1)^kappa - 1 + beta * kappa + eps
    with p_i the normalized-centroid projection along e_alpha and min_p
    the minimum projection over boundary vertices.
    """
    t = gamma_tensor(amap, constant(alpha), constant(kappa), constant(beta), eps)
    return t.value


def gamma_tensor(amap, alpha_t: Tensor, kappa_t: Tensor, beta_t: Tensor, eps) -> Tensor:
    centroids, boundary = _normalized_geometry(amap)
    e = _unit_vector(alpha_t)
    proj = constant(centroids) @ e  # (S,)
    min_proj = _min_projection(boundary, e)
    sig = (proj - min_proj).sigmoid()
    return (sig + 1.0).power(kappa_t) - 1.0 + beta_t * kappa_t + eps


def _unit_vector(alpha_t: Tensor) -> Tensor:
    # cos via tanh-free composition: build [cos, sin] from scalar alpha
    cos = Tensor(
        math.cos(alpha_t.item()),
        (alpha_t,),
        lambda g, out: nnet._accum(alpha_t, -g * math.sin(alpha_t.item())),
    )
    sin = Tensor(
        math.sin(alpha_t.item()),
        (alpha_t,),
        lambda g, out: nnet._accum(alpha_t, g * math.cos(alpha_t.item())),
    )
    return _stack2(cos, sin)


def _stack2(a: Tensor, b: Tensor) -> Tensor:
    def bw(g, out):
        nnet._accum(a, g[0])
        nnet._accum(b, g[1])

    return Tensor(np.array([a.item(), b.item()]), (a, b), bw)


def _min_projection(vertices: np.ndarray, e: Tensor) -> Tensor:
    # min over boundary vertices of v . e; subgradient via the argmin vertex
    projs = vertices @ e.value
    i = int(np.argmin(projs))
    v = vertices[i]

    def bw(g, out):
        nnet._accum(e, g * v)

    return Tensor(projs[i], (e,), bw)


def attention_weights(amap: AreaMap, modifier, params: ModelParams):
    """Match-count attention over areas, normalized to sum 1.

    Counts modifier/attribute token pairs whose frozen match embeddings
    have dot product above lam. Returns (weights, all_zero_flag); an
    all-zero count falls back to uniform.
    """
    lex = params.lexicon
    u_emb = lex.embed_match(modifier.tokens)  # (L, Hm)
    counts = np.zeros(amap.n_areas)
    for i, area in enumerate(amap.areas):
        attr_tokens = lex.tokenize(" ".join(area.attribute_tokens()))
        m_emb = lex.embed_match(attr_tokens)  # (N, Hm)
        counts[i] = np.sum(m_emb @ u_emb.T > params.lam)
    total = counts.sum()
    if total <= 0:
        return np.full(amap.n_areas, 1.0 / amap.n_areas), True
    return counts / total, False


def precise_weights(modifier, belief, amap, params, alpha=None, kappa=None,
                    beta=None):
    """Area weight vector of a precise update: gamma * attention * prior."""
    w_prev, prior_degenerate = gather_area_weights(belief, amap)
    if kappa is None or beta is None:
        kappa, beta = predict_kappa_beta(modifier, params)
    if alpha is None:
        alpha = predict_direction(modifier, params)
    gamma = gamma_factor(amap, alpha, kappa, beta, params.eps)
    w_bar, attn_flag = attention_weights(amap, modifier, params)
    w = gamma * w_bar * w_prev
    total = w.sum()
    if total <= 0:
        zeroed = []
        if prior_degenerate or not np.any(w_prev * w_bar > 0):
            if np.all(w_bar * w_prev == 0):
                zeroed.append("attention x prior support disjoint")
            if prior_degenerate:
                zeroed.append("prior had no mass in any area")
        raise GroundingError(
            "precise update produced an all-zero weight vector"
            + (f" ({'; '.join(zeroed)})" if zeroed else ""),
            kind="degenerate-precise",
        )
    return w / total


def precise_update(modifier, belief, amap, params, **heads) -> BeliefGrid:
    w = precise_weights(modifier, belief, amap, params, **heads)
    return scatter_area_weights(w, amap)


def apply(modifier, belief, amap, params):
    """Classify the modifier and run exactly that update function."""
    kind = classify_modifier(modifier, params)
    if kind == UpdateType.DUMMY:
        return kind, dummy_update(modifier, belief)
    if kind == UpdateType.PROXIMITY:
        return kind, proximity_update(modifier, belief, amap, params)
    if kind == UpdateType.DIRECTIONAL:
        return kind, directional_update(modifier, belief, amap, params)
    return kind, precise_update(modifier, belief, amap, params)


@dataclass
class BeliefTrace:
    """Per-step record of one grounding run plus the final area ranking."""

    steps: list = field(default_factory=list)  # (modifier, UpdateType, BeliefGrid)
    ranked: list = field(default_factory=list)  # (area_id, weight) descending

    def top_k_areas(self, k: int) -> list:
        if k < 1:
            raise ValueError("k must be >= 1")
        return [area_id for area_id, _ in self.ranked[:k]]


def ground(instruction: str, amap: AreaMap, params: ModelParams) -> BeliefTrace:
    """Ground a full instruction: parse, fold updates, rank areas."""
    phrase = extract_destination(instruction)
    chain = parse_modifier_chain(phrase, params.lexicon)
    return ground_chain(chain, amap, params)


def ground_chain(chain, amap: AreaMap, params: ModelParams,
                 prior: BeliefGrid | None = None) -> BeliefTrace:
    belief = prior if prior is not None else dummy_prior(amap)
    trace = BeliefTrace()
    for step, modifier in enumerate(chain):
        try:
            kind, belief = apply(modifier, belief, amap, params)
        except GroundingError as e:
            e.step = step
            raise
        trace.steps.append((modifier, kind, belief))
    w, _ = gather_area_weights(belief, amap)
    order = sorted(range(amap.n_areas), key=lambda i: (-w[i], amap.areas[i].id))
    trace.ranked = [(amap.areas[i].id, float(w[i])) for i in order]
    return trace


def top_k_areas(trace: BeliefTrace, k: int) -> list:
    return trace.top_k_areas(k)
