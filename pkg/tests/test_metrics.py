import math

import pytest

from xpcfg.chart import NoParseError
from xpcfg.generate import GenConfig, sample_corpus
from xpcfg.grammar import BinaryRule, CnfGrammar, LexRule
from xpcfg.metrics import entropy


def two_word_grammar(p):
    """One sentence 'w w' with probability p."""
    return CnfGrammar(["S", "A"], ["w"],
                      [BinaryRule("S", "A", "A", p)],
                      [LexRule("A", "w", 1.0)],
                      root="S")


class TestEntropy:
    def test_single_sentence_base2(self):
        rep = entropy(two_word_grammar(0.25), [["w", "w"]], base=2)
        assert rep.h3a == pytest.approx(1.0)
        assert rep.h3b == pytest.approx(1.0)

    def test_single_sentence_natural(self):
        rep = entropy(two_word_grammar(0.25), [["w", "w"]])
        assert rep.h3a == pytest.approx(math.log(4.0) / 2)
        assert rep.h3b == pytest.approx(rep.h3a)

    def test_equal_lengths_make_measures_coincide(self, xbar_cnf):
        corpus = [s for s in sample_corpus(xbar_cnf, GenConfig(count=200, seed=2))
                  if len(s) == 5]
        assert len(corpus) > 20
        rep = entropy(xbar_cnf, corpus)
        assert rep.h3a == pytest.approx(rep.h3b, rel=1e-12)

    def test_permutation_invariance(self, xbar_cnf):
        corpus = sample_corpus(xbar_cnf, GenConfig(count=50, seed=4))
        a = entropy(xbar_cnf, corpus)
        b = entropy(xbar_cnf, list(reversed(corpus)))
        assert a.h3a == pytest.approx(b.h3a, rel=1e-12)
        assert a.h3b == pytest.approx(b.h3b, rel=1e-12)

    def test_scaling_law(self, xbar_cnf):
        # scaling the root rule scales every sentence probability by c, since
        # the root category never occurs on a right-hand side here
        assert all("V2" not in (r.left, r.right) for r in xbar_cnf.binary)
        corpus = sample_corpus(xbar_cnf, GenConfig(count=40, seed=6))
        c = 0.37
        probs = [r.prob * (c if r.mother == "V2" else 1.0) for r in xbar_cnf.rules()]
        scaled = xbar_cnf.replace_probs(probs)
        base = entropy(xbar_cnf, corpus)
        shifted = entropy(scaled, corpus)
        k = len(corpus)
        total_words = base.total_words
        assert shifted.h3a - base.h3a == pytest.approx(-math.log(c) * k / total_words,
                                                       rel=1e-9)
        inv_lengths = sum(1 / len(s) for s in corpus)
        assert shifted.h3b - base.h3b == pytest.approx(-math.log(c) * inv_lengths / k,
                                                       rel=1e-9)

    def test_unparseable_excluded_and_counted(self, xbar_cnf):
        rep = entropy(xbar_cnf, [["the", "cat", "chases", "the", "ball"],
                               ["chases", "chases"]])
        assert rep.skipped == 1
        assert rep.sentences == 1
        assert rep.total_words == 5

    def test_all_unparseable_raises(self, xbar_cnf):
        with pytest.raises(NoParseError):
            entropy(xbar_cnf, [["chases", "chases"]])

    def test_empty_corpus_raises(self, xbar_cnf):
        with pytest.raises(ValueError):
            entropy(xbar_cnf, [])

    def test_reference_values_on_fresh_corpus(self, xbar_cnf):
        # scoring the generating grammar on its own 500-sentence sample lands
        # on the reference table's row for the hand-written grammar
        corpus = sample_corpus(xbar_cnf, GenConfig(count=500, seed=42))
        rep = entropy(xbar_cnf, corpus)
        assert rep.h3a == pytest.approx(1.5954, abs=0.05)
        assert rep.h3b == pytest.approx(1.5688, abs=0.05)
