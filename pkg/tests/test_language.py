"""Tokenization, destination extraction, and modifier-chain parsing."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from groundnav.language import (
    COMPASS,
    OOV,
    Lexicon,
    ParseError,
    compass_angle,
    compass_word,
    extract_destination,
    parse_modifier_chain,
    split_words,
    wrap_angle,
)


class TestSplitWords:
    def test_punctuation_and_case(self):
        assert split_words("Go to Room 124.") == ["go", "to", "room", "124"]
        assert split_words("the North-East exit") == ["the", "north", "east", "exit"]

    def test_empty(self):
        assert split_words("  ,. ") == []


class TestCompass:
    def test_cardinal_round_trip(self):
        for word, angle in COMPASS:
            assert compass_word(angle) == word
            assert compass_angle(word) == angle

    def test_nearest_within_half_sector(self):
        assert compass_word(math.pi / 2 + 0.1) == "north"
        assert compass_word(-3 * math.pi / 4 - 0.05) == "south west"

    def test_boundary_goes_to_lower_index(self):
        # exactly between east (index 0) and north east (index 1)
        assert compass_word(math.pi / 8) == "east"

    def test_unknown_phrase(self):
        with pytest.raises(ParseError):
            compass_angle("up")

    @given(st.floats(min_value=-50.0, max_value=50.0))
    @settings(max_examples=100, deadline=None)
    def test_round_trip_within_sector(self, angle):
        word = compass_word(angle)
        assert abs(wrap_angle(angle - compass_angle(word))) <= math.pi / 8 + 1e-9


class TestWrapAngle:
    @given(st.floats(min_value=-100.0, max_value=100.0))
    @settings(max_examples=100, deadline=None)
    def test_range_and_periodicity(self, a):
        w = wrap_angle(a)
        assert -math.pi <= w < math.pi
        assert wrap_angle(a + 2 * math.pi) == pytest.approx(w, abs=1e-9)

    def test_identity_inside_range(self):
        assert wrap_angle(0.3) == pytest.approx(0.3)
        assert wrap_angle(math.pi) == -math.pi


class TestExtractDestination:
    def test_reference_phrases(self):
        assert (
            extract_destination("go to the meeting room near the north exit")
            == "the meeting room near the north exit"
        )
        assert extract_destination("navigate to room 124") == "room 124"
        assert extract_destination("Go to the area 305") == "the area 305"

    def test_carry_verb(self):
        assert extract_destination("bring the package to room 124") == "room 124"

    def test_errors(self):
        with pytest.raises(ParseError):
            extract_destination("")
        with pytest.raises(ParseError):
            extract_destination("dance to the music room")  # unknown verb
        with pytest.raises(ParseError):
            extract_destination("go to")
        with pytest.raises(ParseError):
            extract_destination("bring the package")


class TestParseModifierChain:
    def test_three_step_phrase(self, office_lexicon):
        chain = parse_modifier_chain(
            "the meeting room near the north exit", office_lexicon
        )
        assert [m.raw for m in chain] == [
            "the north exit",
            "near",
            "the meeting room",
        ]

    def test_five_step_phrase(self, office_lexicon):
        chain = parse_modifier_chain(
            "the printer to the west of the golden gate meeting room", office_lexicon
        )
        assert [m.raw for m in chain] == [
            "the golden gate meeting room",
            "of",
            "the west",
            "to",
            "the printer",
        ]

    def test_single_segment(self, office_lexicon):
        chain = parse_modifier_chain("room 124", office_lexicon)
        assert [m.raw for m in chain] == ["room 124"]

    def test_multiword_preposition(self, office_lexicon):
        chain = parse_modifier_chain("the printer close to room 124", office_lexicon)
        assert [m.raw for m in chain] == ["room 124", "close to", "the printer"]

    def test_chain_length_is_odd(self, office_lexicon):
        for phrase in (
            "room 124",
            "the exit near the printer",
            "the printer to the west of the golden gate meeting room",
        ):
            assert len(parse_modifier_chain(phrase, office_lexicon)) % 2 == 1

    def test_reversed_chain_reconstructs_tokens(self, office_lexicon):
        phrase = "the meeting room near the north exit"
        chain = parse_modifier_chain(phrase, office_lexicon)
        rebuilt = [w for m in reversed(chain) for w in m.words]
        assert rebuilt == split_words(phrase)

    def test_errors(self, office_lexicon):
        with pytest.raises(ParseError):
            parse_modifier_chain("", office_lexicon)
        with pytest.raises(ParseError):
            parse_modifier_chain("near the exit", office_lexicon)  # leading prep
        with pytest.raises(ParseError):
            parse_modifier_chain("the exit near", office_lexicon)  # trailing prep


class TestLexicon:
    def test_vocabulary_covers_reference_phrase(self, office_lexicon):
        oov = office_lexicon.vocabulary[OOV]
        tokens = office_lexicon.tokenize("golden gate meeting room")
        assert len(tokens) == 4
        assert all(t.vocab_index != oov for t in tokens)

    def test_oov_token(self, office_lexicon):
        (tok,) = office_lexicon.tokenize("zebra")
        assert tok.vocab_index == office_lexicon.vocabulary[OOV]

    def test_match_embeddings_near_orthogonal(self, office_lexicon):
        m = office_lexicon.match_embeddings
        assert np.allclose(np.linalg.norm(m, axis=1), 1.0, atol=1e-9)
        dots = np.abs(m @ m.T - np.eye(len(m)))
        assert dots.max() < 0.5

    def test_match_dot_semantics(self, office_lexicon):
        a = office_lexicon.embed_match(office_lexicon.tokenize("room"))
        b = office_lexicon.embed_match(office_lexicon.tokenize("room exit"))
        dots = (a @ b.T)[0]
        assert dots[0] == pytest.approx(1.0)
        assert abs(dots[1]) < 0.5

    def test_tokenize_idempotent(self, office_lexicon):
        once = office_lexicon.tokenize("go to Room 124")
        again = office_lexicon.tokenize(" ".join(t.text for t in once))
        assert once == again

    def test_with_trainable_replaces_table(self, office_lexicon):
        table = np.zeros_like(office_lexicon.trainable_embeddings)
        other = office_lexicon.with_trainable(table)
        assert np.array_equal(other.trainable_embeddings, table)
        assert other.vocabulary == office_lexicon.vocabulary
        assert np.array_equal(other.match_embeddings, office_lexicon.match_embeddings)

    def test_empty_modifier_rejected(self, office_lexicon):
        with pytest.raises(ParseError):
            office_lexicon.modifier("  ")
