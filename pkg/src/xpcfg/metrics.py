"""Per-word entropy measures of a corpus under a grammar.

With P(S) the inside probability of sentence S and |S| its length over K
scored sentences:

    aggregate     H3a = -(sum log P(S)) / (sum |S|)
    mean-per-word H3b = -(1/K) * sum (log P(S) / |S|)

The default logarithm is natural (nats per word), which is the scale the
reference entropy tables for both the small X-bar language (about 1.6 per
word) and the two-symbol mirror language (about 0.7 per word) were computed
on; pass base=2 for bits per word.

Unparseable sentences are excluded from both sums and reported in the
``skipped`` count; assigning them probability zero would make both measures
infinite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .chart import NEG_INF, NoParseError, ParseError, cyk_fill


@dataclass
class EntropyReport:
    h3a: float
    h3b: float
    sentences: int
    total_words: int
    skipped: int


def entropy(grammar, corpus, base=None):
    """Score a corpus; raises NoParseError when nothing is parseable."""
    corpus = list(corpus)
    if not corpus:
        raise ValueError("empty corpus")
    scale = 1.0 if base is None else math.log(base)
    total_log = 0.0
    mean_terms = 0.0
    words = 0
    scored = 0
    skipped = 0
    for tokens in corpus:
        try:
            lp = cyk_fill(grammar, tokens).sentence_logprob()
        except ParseError:
            lp = NEG_INF
        if lp == NEG_INF:
            skipped += 1
            continue
        lp /= scale
        total_log += lp
        mean_terms += lp / len(tokens)
        words += len(tokens)
        scored += 1
    if scored == 0:
        raise NoParseError("no sentence in the corpus is parseable")
    return EntropyReport(
        h3a=-total_log / words,
        h3b=-mean_terms / scored,
        sentences=scored,
        total_words=words,
        skipped=skipped,
    )
