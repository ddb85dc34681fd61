"""Synthetic single-step training samples and composite benchmark queries.

For each update type and each area taken as the key area, K random
modifiers are generated from the closed dictionary, giving 4 * S * K
samples. Composite queries are template instructions whose gold area is
verified unique by a geometric oracle independent of the belief engine.
"""

from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import dataclass

import numpy as np

from .grounder import UpdateType
from .language import (
    ARTICLES,
    COMPASS,
    DIRECTION_WORDS,
    DUMMY_WORDS,
    PROXIMITY_PHRASES,
    Lexicon,
    Modifier,
    compass_angle,
    compass_word,
    wrap_angle,
)
from .mapmodel import (
    AreaMap,
    BeliefGrid,
    gaussian_grid,
    grid_from_pgm,
    uniform_over_area,
)

log = logging.getLogger(__name__)

PRIOR_SAMPLES = 256  # location draws used to pick the top-two areas
MAX_RETRIES = 20


@dataclass
class TrainingSample:
    """One single-update supervision tuple; optional fields depend on type."""

    modifier: Modifier
    type_label: int
    prior: BeliefGrid | None = None
    posterior: BeliefGrid | None = None
    alpha: float | None = None      # direction label in [-pi, pi)
    kappa: int | None = None        # 1 iff a direction word is used as adjective
    target_area: str | None = None  # gold area id for precise samples


def _article(rng):
    return [rng.choice(["the", "a"])] if rng.random() < 0.5 else []


def gen_dummy(lexicon: Lexicon, rng) -> TrainingSample:
    word = rng.choice(list(DUMMY_WORDS))
    return TrainingSample(lexicon.modifier(word), int(UpdateType.DUMMY))


def gen_proximity(amap, key_area, lexicon, rng, rho=1.0) -> TrainingSample:
    area = amap.area_by_id(key_area)
    prior = uniform_over_area(amap, key_area)
    posterior = gaussian_grid(amap, area.centroid, rho * area.size)
    phrase = " ".join(PROXIMITY_PHRASES[rng.integers(len(PROXIMITY_PHRASES))])
    return TrainingSample(
        lexicon.modifier(phrase), int(UpdateType.PROXIMITY), prior, posterior
    )


def gen_directional(amap, key_area, lexicon, rng, rho=1.0) -> TrainingSample:
    area = amap.area_by_id(key_area)
    prior = uniform_over_area(amap, key_area)
    alpha = float(rng.uniform(-math.pi, math.pi))
    base = gaussian_grid(amap, area.centroid, rho * area.size)
    e = np.array([math.cos(alpha), math.sin(alpha)])
    keep = (amap.cell_centers - np.asarray(area.centroid)) @ e > 0
    masked = np.where(keep, base.flat, 0.0)
    posterior = BeliefGrid.from_unnormalized(amap.width, amap.height, masked)
    words = _article(rng) + compass_word(alpha).split()
    return TrainingSample(
        lexicon.modifier(" ".join(words)),
        int(UpdateType.DIRECTIONAL),
        prior,
        posterior,
        alpha=alpha,
    )


def _random_precise_prior(amap, key_area, rng, rho):
    """Proximity- or directional-style grid around the key area (50/50)."""
    area = amap.area_by_id(key_area)
    base = gaussian_grid(amap, area.centroid, rho * area.size)
    if rng.random() < 0.5:
        return base
    alpha = float(rng.uniform(-math.pi, math.pi))
    e = np.array([math.cos(alpha), math.sin(alpha)])
    keep = (amap.cell_centers - np.asarray(area.centroid)) @ e > 0
    masked = np.where(keep, base.flat, 0.0)
    if masked.sum() <= 0:
        return base
    return BeliefGrid.from_unnormalized(amap.width, amap.height, masked)


def _top_two_areas(amap, belief, rng):
    draws = rng.choice(len(belief.flat), size=PRIOR_SAMPLES, p=belief.flat)
    hits = np.zeros(amap.n_areas, dtype=int)
    owners = amap.cell_area_index[draws]
    np.add.at(hits, owners[owners >= 0], 1)
    if np.count_nonzero(hits) < 2:
        return None
    # most hits first, ties toward the lower area id
    order = sorted(range(amap.n_areas), key=lambda i: (-hits[i], amap.areas[i].id))
    return amap.areas[order[0]], amap.areas[order[1]]


def modifier_from_rules(a1, a2, amap, rng, lexicon):
    """Minimal modifier that uniquely locates a1 against a2.

    Returns (Modifier, kappa_label, alpha_label_or_None). Bracketed
    template parts are included with probability 0.5; an id-based form
    ("room 124") is emitted with probability 0.25 so numeric ids are seen
    in training. Direction adjectives use the compass of a1's centroid
    relative to a2's.
    """
    kappa = 0
    alpha = None
    direction_words = []

    if rng.random() < 0.25:
        words = [a1.category, a1.id]
    elif a1.category != a2.category:
        words = ([a1.subcategory] if a1.subcategory and rng.random() < 0.5 else [])
        words = words + [a1.category]
    else:
        rel = np.asarray(a1.centroid) - np.asarray(a2.centroid)
        alpha = float(math.atan2(rel[1], rel[0]))
        direction_words = compass_word(alpha).split()
        if a1.subcategory != a2.subcategory:
            use_dir = rng.random() < 0.5
            words = ((direction_words if use_dir else [])
                     + ([a1.subcategory] if a1.subcategory else [])
                     + [a1.category])
            kappa = 1 if use_dir else 0
            if not use_dir:
                alpha = None
        else:
            words = (direction_words
                     + ([a1.subcategory] if a1.subcategory and rng.random() < 0.5 else [])
                     + [a1.category])
            kappa = 1

    # optionally teach the name tokens; a direction-word name acts as a
    # direction adjective pointing at the word's own compass angle
    if a1.name and rng.random() < 0.4 and not direction_words:
        name_words = a1.name.split()
        if kappa == 0 and all(w in DIRECTION_WORDS for w in name_words):
            kappa = 1
            alpha = compass_angle(" ".join(name_words))
        words = name_words + words

    words = _article(rng) + words
    return lexicon.modifier(" ".join(words)), kappa, alpha


def gen_precise(amap, key_area, lexicon, rng, rho=1.0) -> TrainingSample | None:
    for _ in range(MAX_RETRIES):
        prior = _random_precise_prior(amap, key_area, rng, rho)
        pair = _top_two_areas(amap, prior, rng)
        if pair is not None:
            a1, a2 = pair
            modifier, kappa, alpha = modifier_from_rules(a1, a2, amap, rng, lexicon)
            posterior = uniform_over_area(amap, a1.id)
            return TrainingSample(
                modifier,
                int(UpdateType.PRECISE),
                prior,
                posterior,
                alpha=alpha,
                kappa=kappa,
                target_area=a1.id,
            )
    log.warning("skipping precise sample for key area %s: priors kept hitting "
                "fewer than two areas", key_area)
    return None


def generate_dataset(amap: AreaMap, lexicon: Lexicon, k=10, seed=0, rho=1.0):
    """4 * S * K samples: type x key area x K modifiers, seed-deterministic."""
    if k < 1:
        raise ValueError("k must be >= 1")
    rng = np.random.default_rng(seed)
    samples = []
    for _ in range(k):
        for area in amap.areas:
            samples.append(gen_dummy(lexicon, rng))
    for kind in (gen_proximity, gen_directional, gen_precise):
        for _ in range(k):
            for area in amap.areas:
                s = kind(amap, area.id, lexicon, rng, rho=rho)
                if s is not None:
                    samples.append(s)
    return samples


# -- serialization ---------------------------------------------------------


def _rle_encode(flat):
    runs = []
    i = 0
    vals = list(flat)
    while i < len(vals):
        j = i
        while j < len(vals) and vals[j] == vals[i]:
            j += 1
        runs.append([j - i, vals[i]])
        i = j
    return runs


def _rle_decode(runs):
    out = []
    for count, value in runs:
        out.extend([value] * count)
    return np.array(out)


def save_dataset(samples, path, amap, grids="pgm"):
    """Line-delimited JSON; grids inline (RLE) or as sidecar PGM files."""
    sidecar_dir = os.path.splitext(path)[0] + "_grids"
    if grids == "pgm":
        os.makedirs(sidecar_dir, exist_ok=True)
    with open(path, "w") as f:
        for n, s in enumerate(samples):
            rec = {
                "modifier": s.modifier.raw,
                "type": s.type_label,
                "alpha": s.alpha,
                "kappa": s.kappa,
                "target_area": s.target_area,
            }
            for field_name, grid in (("prior", s.prior), ("posterior", s.posterior)):
                if grid is None:
                    continue
                if grids == "pgm":
                    rel = f"{os.path.basename(sidecar_dir)}/{n:05d}_{field_name}.pgm"
                    with open(os.path.join(os.path.dirname(path) or ".", rel), "wb") as pf:
                        pf.write(grid.to_pgm())
                    rec[field_name] = {"pgm": rel}
                elif grids == "rle":
                    rec[field_name] = {"rle": _rle_encode(grid.flat)}
                else:
                    raise ValueError("grids must be 'pgm' or 'rle'")
            f.write(json.dumps(rec) + "\n")


def load_dataset(path, amap, lexicon):
    base = os.path.dirname(path) or "."
    samples = []
    with open(path) as f:
        for line in f:
            rec = json.loads(line)
            grids = {}
            for field_name in ("prior", "posterior"):
                if field_name not in rec:
                    grids[field_name] = None
                elif "pgm" in rec[field_name]:
                    with open(os.path.join(base, rec[field_name]["pgm"]), "rb") as pf:
                        grids[field_name] = grid_from_pgm(pf.read())
                else:
                    grids[field_name] = BeliefGrid.from_unnormalized(
                        amap.width, amap.height, _rle_decode(rec[field_name]["rle"])
                    )
            samples.append(
                TrainingSample(
                    lexicon.modifier(rec["modifier"]),
                    rec["type"],
                    grids["prior"],
                    grids["posterior"],
                    alpha=rec["alpha"],
                    kappa=rec["kappa"],
                    target_area=rec["target_area"],
                )
            )
    return samples


# -- composite benchmark queries ------------------------------------------


MARGIN = 2.0  # gold oracle score must beat the runner-up by this factor


def _match_count(head_words, area):
    attrs = area.attribute_tokens()
    return sum(attrs.count(w) for w in head_words)


def _head_words(phrase):
    return [w for w in phrase.split() if w not in ARTICLES]


def _covers(head_words, area):
    return all(w in area.attribute_tokens() for w in head_words)


def _unique_precise_phrases(amap):
    """Phrases that ground uniquely from the dummy prior (landmarks)."""
    phrases = []
    for a in amap.areas:
        phrases.append((f"{a.category} {a.id}", a.id))
        if a.name:
            full = f"the {a.name} {a.subcategory or ''} {a.category}".split()
            phrase = " ".join(full)
            heads = _head_words(phrase)
            if sum(_covers(heads, other) for other in amap.areas) == 1:
                phrases.append((phrase, a.id))
    return phrases


def _oracle_winner(amap, head_words, score_fn):
    """Unique best area under count x geometric score, or None.

    The gold must contain every head token and beat all other positive
    scores by MARGIN.
    """
    scores = np.array(
        [_match_count(head_words, a) * score_fn(a) for a in amap.areas]
    )
    order = np.argsort(-scores, kind="stable")
    best = order[0]
    if scores[best] <= 0 or not _covers(head_words, amap.areas[best]):
        return None
    if len(order) > 1 and scores[order[1]] * MARGIN > scores[best]:
        return None
    return amap.areas[best].id


def _descriptor_pool(amap, rng):
    pool = []
    for a in amap.areas:
        pool.append(f"the {a.category}")
        if a.subcategory:
            pool.append(f"the {a.subcategory} {a.category}")
    return sorted(set(pool))


def gen_composite(amap: AreaMap, lexicon: Lexicon, seed=0, n=100, steps=1,
                  rho=1.0, max_attempts=20000):
    """(instruction, gold area id) pairs with oracle-verified unique golds.

    steps=1: "go to room 124"; steps=3: "go to the phone room near the
    north exit"; steps=5: "go to the printer to the west of the golden
    gate meeting room".
    """
    if steps not in (1, 3, 5):
        raise ValueError("steps must be 1, 3, or 5")
    rng = np.random.default_rng(seed)
    landmarks = _unique_precise_phrases(amap)
    descriptors = _descriptor_pool(amap, rng)
    queries = []
    for _ in range(max_attempts):
        if len(queries) >= n:
            break
        if steps == 1:
            phrase, gold = landmarks[rng.integers(len(landmarks))]
            queries.append((f"go to {phrase}", gold))
            continue

        head = descriptors[rng.integers(len(descriptors))]
        lm_phrase, lm_id = landmarks[rng.integers(len(landmarks))]
        lm = amap.area_by_id(lm_id)
        var = rho * lm.size
        center = np.asarray(lm.centroid)

        def density(area):
            d2 = float(((np.asarray(area.centroid) - center) ** 2).sum())
            return math.exp(-0.5 * d2 / var) * area.size

        head_words = _head_words(head)
        if steps == 3:
            gold = _oracle_winner(amap, head_words, density)
            if gold is None:
                continue
            queries.append((f"go to {head} near {lm_phrase}", gold))
        else:
            word = COMPASS[rng.integers(len(COMPASS))][0]
            e = np.array([math.cos(compass_angle(word)), math.sin(compass_angle(word))])

            def directional_density(area):
                rel = np.asarray(area.centroid) - center
                if rel @ e <= 0:
                    return 0.0
                return density(area)

            gold = _oracle_winner(amap, head_words, directional_density)
            if gold is None:
                continue
            queries.append((f"go to {head} to the {word} of {lm_phrase}", gold))
    if len(queries) < n:
        raise ValueError(
            f"could only build {len(queries)} of {n} step-{steps} queries on this map"
        )
    return queries
