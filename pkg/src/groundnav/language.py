"""Tokenization, closed vocabulary, embedding tables, and modifier chains.

Instructions follow a restricted grammar: a motion verb phrase followed
by a destination noun phrase. The noun phrase alternates head phrases
with prepositions; splitting on the closed preposition set yields the
ordered modifier chain, innermost dependency first.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

OOV = "<oov>"
ARTICLES = ("the", "a", "an")
DUMMY_WORDS = ("to", "of")
PROXIMITY_PHRASES = (("near",), ("besides",), ("close", "to"))

# compass convention: 0 = east (+x), pi/2 = north (+y)
COMPASS = (
    ("east", 0.0),
    ("north east", math.pi / 4),
    ("north", math.pi / 2),
    ("north west", 3 * math.pi / 4),
    ("west", -math.pi),
    ("south west", -3 * math.pi / 4),
    ("south", -math.pi / 2),
    ("south east", -math.pi / 4),
)
DIRECTION_WORDS = ("north", "south", "east", "west")

VERB_PREFIXES = ("go", "navigate", "head", "move", "proceed")
CARRY_VERBS = ("bring", "deliver", "take")

_WORD_RE = re.compile(r"[a-z0-9]+")


class ParseError(Exception):
    """Raised when an instruction or phrase falls outside the grammar."""


def compass_word(angle: float) -> str:
    """Nearest of the 8 compass phrases to an angle in [-pi, pi).

    Boundary angles (exact pi/8 multiples) go to the lower compass index.
    """
    best, best_d = None, None
    for i, (word, a) in enumerate(COMPASS):
        d = abs(wrap_angle(angle - a))
        if best is None or d < best_d - 1e-12:
            best, best_d = word, d
    return best


def compass_angle(phrase: str) -> float:
    for word, a in COMPASS:
        if word == phrase:
            return a
    raise ParseError(f"unknown compass phrase {phrase!r}")


def wrap_angle(angle: float) -> float:
    """Wrap into [-pi, pi)."""
    return (angle + math.pi) % (2 * math.pi) - math.pi


def split_words(text: str) -> list:
    """Lowercased, punctuation-stripped word strings."""
    return _WORD_RE.findall(text.lower())


@dataclass(frozen=True)
class Token:
    text: str
    vocab_index: int


@dataclass(frozen=True)
class Modifier:
    """One grammatical segment of a destination noun phrase."""

    tokens: tuple
    raw: str

    @property
    def words(self):
        return [t.text for t in self.tokens]

    @property
    def indices(self):
        return [t.vocab_index for t in self.tokens]


class Lexicon:
    """Closed vocabulary with frozen match embeddings and a trainable table.

    Match rows are unit-norm and mutually near-orthogonal so the dot
    product acts as an exact-word-match test under a threshold. The
    trainable table feeds the recurrent encoders and is replaced
    wholesale by the trainer.
    """

    def __init__(self, vocabulary, match_embeddings, trainable_embeddings):
        self.vocabulary = dict(vocabulary)
        self.match_embeddings = np.asarray(match_embeddings, dtype=float)
        self.trainable_embeddings = np.asarray(trainable_embeddings, dtype=float)
        self.words = [None] * len(self.vocabulary)
        for w, i in self.vocabulary.items():
            self.words[i] = w
        assert OOV in self.vocabulary
        assert self.match_embeddings.shape[0] == len(self.vocabulary)
        assert self.trainable_embeddings.shape[0] == len(self.vocabulary)

    @classmethod
    def build(cls, amap, extra_words=(), match_width=64, train_width=32,
              match_threshold=0.5, seed=0):
        words = {OOV}
        for area in amap.areas:
            words.update(area.attribute_tokens())
        words.update(ARTICLES)
        words.update(DUMMY_WORDS)
        for phrase in PROXIMITY_PHRASES:
            words.update(phrase)
        words.update(DIRECTION_WORDS)
        words.update(VERB_PREFIXES)
        words.update(CARRY_VERBS)
        words.update(w.lower() for w in extra_words)
        vocab = {w: i for i, w in enumerate(sorted(words))}

        rng = np.random.default_rng(seed)
        match = _near_orthogonal_rows(len(vocab), match_width, match_threshold, rng)
        trainable = rng.normal(0.0, 0.5, size=(len(vocab), train_width))
        return cls(vocab, match, trainable)

    @property
    def size(self):
        return len(self.vocabulary)

    def with_trainable(self, table) -> "Lexicon":
        return Lexicon(self.vocabulary, self.match_embeddings, table)

    def tokenize(self, text: str) -> list:
        oov = self.vocabulary[OOV]
        return [Token(w, self.vocabulary.get(w, oov)) for w in split_words(text)]

    def modifier(self, text: str) -> Modifier:
        tokens = self.tokenize(text)
        if not tokens:
            raise ParseError("empty modifier")
        return Modifier(tuple(tokens), text)

    def embed_match(self, tokens) -> np.ndarray:
        return self.match_embeddings[[t.vocab_index for t in tokens]]

    def embed_train(self, tokens) -> np.ndarray:
        return self.trainable_embeddings[[t.vocab_index for t in tokens]]


def _near_orthogonal_rows(n, width, threshold, rng, max_tries=200):
    """Random unit rows with pairwise |dot| below threshold."""
    rows = np.zeros((n, width))
    for i in range(n):
        for _ in range(max_tries):
            v = rng.normal(size=width)
            v /= np.linalg.norm(v)
            if i == 0 or np.abs(rows[:i] @ v).max() < threshold:
                rows[i] = v
                break
        else:
            raise ValueError(
                f"could not draw {n} near-orthogonal rows of width {width}"
            )
    return rows


def extract_destination(instruction: str) -> str:
    """Strip the leading motion verb phrase, returning the destination NP."""
    words = split_words(instruction)
    if not words:
        raise ParseError("empty instruction")
    if words[0] in VERB_PREFIXES:
        rest = words[1:]
        if rest and rest[0] == "to":
            rest = rest[1:]
        if not rest:
            raise ParseError("instruction has no destination phrase")
        return " ".join(rest)
    if words[0] in CARRY_VERBS:
        # "bring/deliver <object> to <destination>"
        if "to" not in words[1:]:
            raise ParseError("carry-verb instruction missing 'to'")
        cut = words.index("to", 1)
        rest = words[cut + 1 :]
        if not rest:
            raise ParseError("instruction has no destination phrase")
        return " ".join(rest)
    raise ParseError(f"unrecognized verb prefix in {instruction!r}")


def _preposition_at(words, i):
    """Length of the preposition phrase starting at words[i], or 0."""
    for phrase in PROXIMITY_PHRASES:
        if tuple(words[i : i + len(phrase)]) == phrase:
            return len(phrase)
    if words[i] in DUMMY_WORDS:
        return 1
    return 0


def parse_modifier_chain(noun_phrase: str, lexicon: Lexicon) -> list:
    """Split a destination NP into modifiers, innermost dependency first.

    Head phrases and prepositions strictly alternate; the returned chain
    starts with the deepest preposition objective and ends with the
    outermost head phrase. Prepositions become their own modifiers.
    """
    words = split_words(noun_phrase)
    if not words:
        raise ParseError("empty destination phrase")
    segments = []  # head, prep, head, prep, ... head
    current = []
    i = 0
    while i < len(words):
        plen = _preposition_at(words, i)
        if plen:
            if not current:
                raise ParseError(
                    f"preposition {' '.join(words[i:i+plen])!r} has no head phrase before it"
                )
            segments.append(current)
            segments.append(words[i : i + plen])
            current = []
            i += plen
        else:
            current.append(words[i])
            i += 1
    if not current:
        raise ParseError("destination phrase ends in a preposition")
    segments.append(current)
    return [lexicon.modifier(" ".join(seg)) for seg in reversed(segments)]
