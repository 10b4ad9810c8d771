from fractions import Fraction
from functools import lru_cache
from itertools import product

import numpy as np
import pytest

from pararank import phonetics
from pararank.errors import LexiconError, PararankError
from pararank.phonetics import (
    ARPABET,
    Lexicon,
    PhonemeSequence,
    g2p,
    levenshtein,
    recog_rate,
    recog_rate_exact,
    sent_int,
)

# Published worked example: target and two perceived transcripts.
TARGET_PH = "Y UW N EH V ER HH IY R AH B AW T IH T R IH L IY IH N DH AH B IH G W AH N Z".split()
P1_PH = "IH T R IH L IY IH Z DH AH B IH G W AH N".split()
P2_PH = "HH IY W EH N T AH B AW T IH T R IH L IY IH N DH AH B IH G W AH N".split()


def seq(symbols):
    return PhonemeSequence(tuple(symbols))


class TestG2p:
    def test_worked_example_target(self, lexicon):
        result = g2p("you never hear about it really in the big ones", lexicon)
        assert list(result) == TARGET_PH
        assert len(result) == 30

    def test_worked_example_p1(self, lexicon):
        result = g2p("it really is the big one", lexicon)
        assert list(result) == P1_PH
        assert len(result) == 16

    def test_worked_example_p2(self, lexicon):
        result = g2p("he went about it really in the big one", lexicon)
        assert list(result) == P2_PH

    def test_empty_text(self, lexicon):
        assert len(g2p("", lexicon)) == 0

    def test_placeholder_dropped(self, lexicon):
        assert list(g2p("(...) big (...)", lexicon)) == ["B", "IH", "G"]
        assert list(g2p("...", lexicon)) == []

    def test_punctuation_and_case(self, lexicon):
        assert list(g2p("Big, ONES!", lexicon)) == list(g2p("big ones", lexicon))

    def test_contractions_keep_apostrophe(self, lexicon):
        assert list(g2p("don't", lexicon)) == ["D", "OW", "N", "T"]

    def test_numerals_spelled_out(self, lexicon):
        assert list(g2p("3", lexicon)) == ["TH", "R", "IY"]
        assert list(g2p("21", lexicon)) == list(g2p("twenty one", lexicon))

    def test_oov_uses_fallback_rules(self, lexicon):
        result = g2p("blargh", lexicon)
        assert len(result) > 0
        assert all(p in ARPABET for p in result)

    def test_deterministic(self, lexicon):
        text = "they seem to give more facts than opinions"
        assert list(g2p(text, lexicon)) == list(g2p(text, lexicon))

    def test_first_pronunciation_wins(self, lexicon):
        # "the" lists DH AH first, DH IY as alternate
        assert list(g2p("the", lexicon)) == ["DH", "AH"]


class TestLexicon:
    def test_load_skips_comments_and_strips_stress(self, tmp_path):
        path = tmp_path / "mini.dict"
        path.write_text(";;; comment\nHELLO  HH AH0 L OW1\nHELLO(1)  HH EH0 L OW1\n")
        lex = Lexicon.load(path)
        assert lex.lookup("hello") == (("HH", "AH", "L", "OW"), ("HH", "EH", "L", "OW"))
        assert lex.lookup("HELLO") == lex.lookup("hello")

    def test_bad_phoneme_rejected(self, tmp_path):
        path = tmp_path / "bad.dict"
        path.write_text("WORD  QQ XX\n")
        with pytest.raises(LexiconError):
            Lexicon.load(path)

    def test_longest_match_rules(self):
        lex = Lexicon({}, (("s", ("S",)), ("sh", ("SH",)), ("e", ("EH",))))
        assert lex.spell_out("she") == ("SH", "EH")

    def test_phoneme_sequence_rejects_unknown_symbols(self):
        with pytest.raises(PararankError):
            PhonemeSequence(("AA", "NOPE"))


class TestLevenshtein:
    def test_identity(self):
        s = seq(["B", "IH", "G"])
        assert levenshtein(s, s) == 0

    def test_worked_example_distances(self):
        # implied by the published rates: 1 - 15/30 = 0.5 and 1 - 9/30 = 0.7
        assert levenshtein(seq(TARGET_PH), seq(P1_PH)) == 15
        assert levenshtein(seq(TARGET_PH), seq(P2_PH)) == 9

    def test_random_sequences_match_naive_recursion(self):
        @lru_cache(maxsize=None)
        def naive(a, b):
            if not a:
                return len(b)
            if not b:
                return len(a)
            if a[0] == b[0]:
                return naive(a[1:], b[1:])
            return 1 + min(naive(a[1:], b), naive(a, b[1:]), naive(a[1:], b[1:]))

        rng = np.random.default_rng(7)
        alphabet = ("B", "D", "G")
        for _ in range(300):
            a = tuple(alphabet[i] for i in rng.integers(0, 3, rng.integers(0, 7)))
            b = tuple(alphabet[i] for i in rng.integers(0, 3, rng.integers(0, 7)))
            assert levenshtein(a, b) == naive(a, b)

    def test_metric_properties(self):
        rng = np.random.default_rng(11)
        alphabet = ("AA", "B", "CH", "D")
        seqs = [
            tuple(alphabet[i] for i in rng.integers(0, 4, rng.integers(0, 8)))
            for _ in range(40)
        ]
        for a in seqs[:12]:
            for b in seqs[:12]:
                d_ab = levenshtein(a, b)
                assert d_ab >= 0
                assert (d_ab == 0) == (a == b)
                assert d_ab == levenshtein(b, a)
                assert d_ab <= max(len(a), len(b))
        for a, b, c in zip(seqs[:10], seqs[10:20], seqs[20:30]):
            assert levenshtein(a, c) <= levenshtein(a, b) + levenshtein(b, c)


class TestRecogRate:
    def test_worked_example_rates(self):
        assert recog_rate(seq(TARGET_PH), seq(P1_PH)) == 0.5
        assert recog_rate(seq(TARGET_PH), seq(P2_PH)) == 0.7

    def test_empty_perceived_is_floor(self):
        assert recog_rate(seq(TARGET_PH), seq([])) == 0.0

    def test_identity_is_one(self):
        assert recog_rate(seq(P1_PH), seq(P1_PH)) == 1.0

    def test_empty_target_rejected(self):
        with pytest.raises(PararankError, match="empty target"):
            recog_rate(seq([]), seq(P1_PH))

    def test_negative_rate_clamped_to_zero(self):
        target = seq(["B"])
        perceived = seq(["D", "G", "K", "P", "T"])
        assert recog_rate(target, perceived) == 0.0

    def test_length_scaling_invariance(self):
        # doubling target and perceived by self-concatenation leaves the rate unchanged
        t, p = tuple(TARGET_PH), tuple(P1_PH)
        assert recog_rate(seq(t + t), seq(p + p)) == recog_rate(seq(t), seq(p))

    def test_exact_arithmetic(self):
        assert recog_rate_exact(seq(TARGET_PH), seq(P2_PH)) == Fraction(7, 10)


class TestSentInt:
    def test_perfect_single_listener(self):
        assert sent_int(seq(P1_PH), [seq(P1_PH)]) == 1.0

    def test_mean_of_worked_example_rates(self):
        assert sent_int(seq(TARGET_PH), [seq(P1_PH), seq(P2_PH)]) == pytest.approx(0.6)

    def test_all_empty_listeners(self):
        assert sent_int(seq(TARGET_PH), [seq([])] * 6) == 0.0

    def test_empty_listener_list_rejected(self):
        with pytest.raises(PararankError):
            sent_int(seq(TARGET_PH), [])

    def test_permutation_invariance_and_convex_hull(self):
        listeners = [seq(P1_PH), seq(P2_PH), seq([]), seq(TARGET_PH)]
        rates = [recog_rate(seq(TARGET_PH), p) for p in listeners]
        forward = sent_int(seq(TARGET_PH), listeners)
        backward = sent_int(seq(TARGET_PH), listeners[::-1])
        assert forward == backward
        assert min(rates) <= forward <= max(rates)


def test_number_words_roundtrip():
    assert phonetics._number_words(0) == ["zero"]
    assert phonetics._number_words(47) == ["forty", "seven"]
    assert phonetics._number_words(1305) == ["one", "thousand", "three", "hundred", "five"]
