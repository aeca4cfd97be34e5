"""Unlabelled bracket comparison between candidate parses and gold trees:
recall, precision and crossing brackets, micro-averaged over a test set.

Recall is the percentage of gold brackets present in the candidate parse;
precision is the percentage of candidate brackets present in the gold set.
A candidate span crosses a gold span when the two share at least one word
but neither contains the other.  Single-word spans are never counted; the
full-sentence span is included for both sides.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .chart import NoParseError, ParseError, cyk_fill, viterbi_parse
from .grammar import GrammarError


@dataclass(frozen=True)
class BracketSet:
    spans: frozenset  # of (start, end) half-open intervals, end - start >= 2
    length: int

    def __post_init__(self):
        for start, end in self.spans:
            if not (0 <= start < end <= self.length and end - start >= 2):
                raise ValueError("bad span (%d, %d) for length %d" % (start, end, self.length))


@dataclass
class GeigScore:
    recall: float
    precision: float
    crossings: int
    matched: int = 0
    candidate_count: int = 0
    gold_count: int = 0


@dataclass
class CorpusScore:
    sentences_total: int = 0
    sentences_parsed: int = 0
    avg_sentence_length: float = 0.0
    recall: float = 0.0
    precision: float = 0.0
    total_crossings: int = 0
    avg_crossings: float = 0.0
    matched: int = 0
    candidate_count: int = 0
    gold_count: int = 0
    per_sentence: list = field(default_factory=list)

    @property
    def parsed_pct(self):
        if self.sentences_total == 0:
            return 0.0
        return 100.0 * self.sentences_parsed / self.sentences_total


# ---------------------------------------------------------------------------
# Trees and brackets

class Tree:
    """General n-ary tree; children mix subtrees and terminal tokens.

    Parse trees from the chart module satisfy the same shape (label plus a
    children tuple), so bracket extraction accepts either.
    """

    __slots__ = ("label", "children")

    def __init__(self, label, children):
        self.label = label
        self.children = tuple(children)

    def tokens(self):
        out = []
        for c in self.children:
            if isinstance(c, str):
                out.append(c)
            else:
                out.extend(c.tokens())
        return out

    def __repr__(self):
        parts = [c if isinstance(c, str) else repr(c) for c in self.children]
        return "(%s %s)" % (self.label, " ".join(parts))


def parse_tree_text(text):
    """Read one bracketed tree in nested-parenthesis form '(Label child ...)'."""
    tokens = text.replace("(", " ( ").replace(")", " ) ").split()
    pos = 0

    def node():
        nonlocal pos
        if tokens[pos] != "(":
            raise GrammarError("expected '(' in tree text at %r" % tokens[pos])
        pos += 1
        if pos >= len(tokens) or tokens[pos] in "()":
            raise GrammarError("missing node label in tree text")
        label = tokens[pos]
        pos += 1
        children = []
        while pos < len(tokens) and tokens[pos] != ")":
            if tokens[pos] == "(":
                children.append(node())
            else:
                children.append(tokens[pos])
                pos += 1
        if pos >= len(tokens):
            raise GrammarError("unbalanced parentheses in tree text")
        pos += 1
        if not children:
            raise GrammarError("empty constituent %r" % label)
        return Tree(label, children)

    result = node()
    if pos != len(tokens):
        raise GrammarError("trailing text after tree")
    return result


def read_gold_trees(text):
    """One bracketed tree per line; blank lines ignored."""
    return [parse_tree_text(line) for line in text.splitlines() if line.strip()]


def load_gold_trees(path):
    with open(path) as fh:
        return read_gold_trees(fh.read())


def brackets_of(tree):
    """Spans of all internal nodes covering at least two words, deduplicated."""
    spans = set()

    def walk(node, start):
        end = start
        for c in node.children:
            if isinstance(c, str):
                end += 1
            else:
                end = walk(c, end)
        if end - start >= 2:
            spans.add((start, end))
        return end

    n = walk(tree, 0)
    return BracketSet(frozenset(spans), n)


# ---------------------------------------------------------------------------
# Scoring

def spans_cross(a, b):
    """Symmetric: spans share a word but neither contains the other."""
    overlap = a[0] < b[1] and b[0] < a[1]
    nested = (a[0] <= b[0] and b[1] <= a[1]) or (b[0] <= a[0] and a[1] <= b[1])
    return overlap and not nested


def geig_score(candidate, gold):
    """Score one sentence's candidate bracket set against the gold set.

    Crossings count candidate spans that cross at least one gold span.
    Empty reference sets score 100 on the corresponding measure.
    """
    if candidate.length != gold.length:
        raise ValueError("bracket sets cover different sentence lengths (%d vs %d)"
                         % (candidate.length, gold.length))
    matched = len(candidate.spans & gold.spans)
    recall = 100.0 * matched / len(gold.spans) if gold.spans else 100.0
    precision = 100.0 * matched / len(candidate.spans) if candidate.spans else 100.0
    crossings = sum(1 for c in candidate.spans if any(spans_cross(c, g) for g in gold.spans))
    return GeigScore(recall, precision, crossings, matched,
                     len(candidate.spans), len(gold.spans))


def evaluate_corpus(grammar, gold_trees, threads=1):
    """Viterbi-parse each gold tree's yield and score against its brackets.

    Unparsed sentences are excluded from the bracket aggregates but counted
    in the sentences-parsed figures; recall and precision are micro-averaged
    over total bracket counts.
    """
    gold_trees = list(gold_trees)

    def parse_one(tree):
        tokens = tree.tokens()
        try:
            chart = cyk_fill(grammar, tokens)
            cand_tree, _ = viterbi_parse(chart, grammar)
        except (ParseError, NoParseError):
            return None
        return cand_tree

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parses = list(pool.map(parse_one, gold_trees))
    else:
        parses = [parse_one(t) for t in gold_trees]

    score = CorpusScore(sentences_total=len(gold_trees))
    total_len = 0
    for gold_tree, cand_tree in zip(gold_trees, parses):
        if cand_tree is None:
            score.per_sentence.append(None)
            continue
        gold = brackets_of(gold_tree)
        cand = brackets_of(cand_tree)
        s = geig_score(cand, gold)
        score.per_sentence.append(s)
        score.sentences_parsed += 1
        total_len += gold.length
        score.matched += s.matched
        score.candidate_count += s.candidate_count
        score.gold_count += s.gold_count
        score.total_crossings += s.crossings
    if score.sentences_parsed:
        score.avg_sentence_length = total_len / score.sentences_parsed
        score.avg_crossings = score.total_crossings / score.sentences_parsed
    score.recall = 100.0 * score.matched / score.gold_count if score.gold_count else 100.0
    score.precision = (100.0 * score.matched / score.candidate_count
                       if score.candidate_count else 100.0)
    return score


def format_corpus_score(score):
    """Summary table in the usual evaluation layout."""
    rows = [
        ("Sentences Parsed (No. / %)",
         "%d / %.2f" % (score.sentences_parsed, score.parsed_pct)),
        ("Average Sentence Length", "%.2f" % score.avg_sentence_length),
        ("Total Recall (%)", "%.2f" % score.recall),
        ("Total Precision (%)", "%.2f" % score.precision),
        ("Total Crossings", "%d" % score.total_crossings),
        ("Average Crossings", "%.2f" % score.avg_crossings),
    ]
    width = max(len(r[0]) for r in rows)
    return "\n".join("%-*s  %s" % (width, k, v) for k, v in rows)
