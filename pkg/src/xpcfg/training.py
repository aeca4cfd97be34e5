"""Inside-outside re-estimation of CNF PCFG probabilities on an unbracketed
corpus, with per-iteration pruning and convergence control.

Outside values use the same scaled mantissa/log-scale representation as the
inside chart.  Expected counts are accumulated per sentence in corpus order,
so results are bit-identical at any thread count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .chart import NEG_INF, NoParseError, ParseError, cyk_fill
from .grammar import BinaryRule, CnfGrammar, GrammarError, LexRule


@dataclass
class TrainConfig:
    max_iterations: int = 30
    convergence_tol: float = 1e-4
    prune_threshold: float = 1e-5
    skip_unparseable: bool = True

    def validate(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if self.convergence_tol <= 0:
            raise ValueError("convergence_tol must be positive")
        if not 0.0 <= self.prune_threshold < 1.0:
            raise ValueError("prune_threshold must lie in [0, 1)")


@dataclass
class TrainReport:
    log_likelihoods: list = field(default_factory=list)
    nonzero_rules: list = field(default_factory=list)
    prune_events: list = field(default_factory=list)  # iterations where pruning zeroed rules
    grammar: CnfGrammar | None = None
    iterations: int = 0
    converged: bool = False
    skipped: int = 0
    coverage_before: float = 0.0
    coverage_after: float = 0.0


class Outside:
    """Outside values per (start, end, nonterminal) in scaled form."""

    def __init__(self, chart, out_m, out_s):
        self.chart = chart
        self.out_m = out_m
        self.out_s = out_s

    def outside_log(self, start, end, label):
        a = self.chart.index.nt_i[label]
        m = self.out_m[start, end, a]
        return NEG_INF if m == 0.0 else math.log(m) + self.out_s[start, end]

    def outside(self, start, end, label):
        lp = self.outside_log(start, end, label)
        return 0.0 if lp == NEG_INF else math.exp(lp)


def _merge_scaled(m_a, s_a, m_b, s_b):
    """Add two scaled vectors, returning (mantissa, scale)."""
    if m_a is None:
        return m_b, s_b
    if m_b is None:
        return m_a, s_a
    s = max(s_a, s_b)
    return m_a * math.exp(s_a - s) + m_b * math.exp(s_b - s), s


def outside_fill(grammar, tokens, chart=None):
    """Compute outside values for a parseable sentence.

    outside(0, n, root) = 1 and, for every cell, inside times outside equals
    the probability mass of all derivations that use the cell.
    """
    if chart is None:
        chart = cyk_fill(grammar, tokens)
    if chart.sentence_logprob() == NEG_INF:
        raise NoParseError("outside values undefined: sentence has no parse")
    idx = chart.index
    n, N = chart.n, idx.n_nts
    in_m, in_s = chart.inside_m, chart.inside_s
    out_m = np.zeros((n, n + 1, N))
    out_s = np.zeros((n, n + 1))
    out_m[0, n, idx.root_i] = 1.0

    for span in range(n - 1, 0, -1):
        for i in range(0, n - span + 1):
            k = i + span
            acc_m, acc_s = None, None
            # as left child of parents (i, kk) with right sibling (k, kk)
            if k < n:
                kks = np.arange(k + 1, n + 1)
                parents = out_m[i, kks, :]
                siblings = in_m[k, kks, :]
                valid = (parents.max(axis=1) > 0.0) & (siblings.max(axis=1) > 0.0)
                if valid.any():
                    s = np.where(valid, out_s[i, kks] + in_s[k, kks], NEG_INF)
                    top = s.max()
                    w = np.exp(s - top)
                    per_rule = (w[:, None] * parents[:, idx.bin_a]
                                * siblings[:, idx.bin_c]).sum(axis=0) * idx.bin_p
                    acc_m, acc_s = idx.group_b @ per_rule, top
            # as right child of parents (hh, k) with left sibling (hh, i)
            if i > 0:
                hhs = np.arange(0, i)
                parents = out_m[hhs, k, :]
                siblings = in_m[hhs, i, :]
                valid = (parents.max(axis=1) > 0.0) & (siblings.max(axis=1) > 0.0)
                if valid.any():
                    s = np.where(valid, out_s[hhs, k] + in_s[hhs, i], NEG_INF)
                    top = s.max()
                    w = np.exp(s - top)
                    per_rule = (w[:, None] * parents[:, idx.bin_a]
                                * siblings[:, idx.bin_b]).sum(axis=0) * idx.bin_p
                    acc_m, acc_s = _merge_scaled(acc_m, acc_s, idx.group_c @ per_rule, top)
            if acc_m is None:
                continue
            peak = acc_m.max()
            if peak > 0.0:
                out_m[i, k] = acc_m / peak
                out_s[i, k] = acc_s + math.log(peak)
    return Outside(chart, out_m, out_s)


def expected_counts(grammar, tokens, chart=None, outside=None):
    """Expected usage count per rule for one sentence, indexed by rule id.

    count(r) = sum over applications of r of
        outside(mother) * prob(r) * inside(daughters) / inside(root).
    """
    if chart is None:
        chart = cyk_fill(grammar, tokens)
    if outside is None:
        outside = outside_fill(grammar, tokens, chart)
    idx = chart.index
    n = chart.n
    in_m, in_s = chart.inside_m, chart.inside_s
    out_m, out_s = outside.out_m, outside.out_s
    root_lp = chart.sentence_logprob()
    if root_lp == NEG_INF:
        raise NoParseError("expected counts undefined: sentence has no parse")

    # accumulation stays in the scaled domain: per-rule contributions are
    # exponentiated only after their (bounded) logs are assembled, so very
    # long, very improbable sentences cannot overflow intermediate factors
    counts = np.zeros(len(grammar.rules()))
    for span in range(2, n + 1):
        for i in range(0, n - span + 1):
            k = i + span
            mother_m = out_m[i, k]
            if mother_m.max() == 0.0:
                continue
            js = np.arange(i + 1, k)
            L = in_m[i, js, :]
            R = in_m[js, k, :]
            valid = (L.max(axis=1) > 0.0) & (R.max(axis=1) > 0.0)
            if not valid.any():
                continue
            s = np.where(valid, in_s[i, js] + in_s[js, k] + out_s[i, k] - root_lp, NEG_INF)
            top = s.max()
            w = np.exp(s - top)
            inner = (w[:, None] * L[:, idx.bin_b] * R[:, idx.bin_c]).sum(axis=0)
            contrib = mother_m[idx.bin_a] * idx.bin_p * inner
            pos = contrib > 0.0
            if not pos.any():
                continue
            if top <= 0.0:
                counts[idx.bin_rid[pos]] += contrib[pos] * math.exp(top)
            else:
                counts[idx.bin_rid[pos]] += np.exp(np.log(contrib[pos]) + top)
    for i, tok in enumerate(tokens):
        base = out_s[i, i + 1] - root_lp
        for a, p, rid in idx.lex[tok]:
            m = out_m[i, i + 1, a]
            if m > 0.0:
                counts[rid] += math.exp(math.log(p) + math.log(m) + base)
    return counts


def reestimate(grammar, counts):
    """Maximum-likelihood update: prob(r) = count(r) / total count of rules
    sharing r's mother.  Mothers with zero total keep their distribution."""
    rules = grammar.rules()
    totals = {}
    for i, r in enumerate(rules):
        totals[r.mother] = totals.get(r.mother, 0.0) + counts[i]
    probs = []
    for i, r in enumerate(rules):
        t = totals[r.mother]
        probs.append(counts[i] / t if t > 0.0 else r.prob)
    return grammar.replace_probs(probs)


def prune(grammar, threshold):
    """Zero rules below the probability threshold and renormalise per mother.

    Returns (grammar, changed); grammars never regain zeroed rules.
    """
    if threshold <= 0.0:
        return grammar, False
    rules = grammar.rules()
    keep = [r.prob if r.prob >= threshold else 0.0 for r in rules]
    changed = any(k == 0.0 and r.prob > 0.0 for k, r in zip(keep, rules))
    if not changed:
        return grammar, False
    totals = {}
    for p, r in zip(keep, rules):
        totals[r.mother] = totals.get(r.mother, 0.0) + p
    probs = [p / totals[r.mother] if totals[r.mother] > 0.0 else 0.0
             for p, r in zip(keep, rules)]
    return grammar.replace_probs(probs), True


def _sentence_estep(grammar, tokens):
    """(log inside(root), expected-count vector) or None when unparseable."""
    try:
        chart = cyk_fill(grammar, tokens)
    except ParseError:
        return None
    lp = chart.sentence_logprob()
    if lp == NEG_INF:
        return None
    outside = outside_fill(grammar, tokens, chart)
    return lp, expected_counts(grammar, tokens, chart, outside)


def _estep(grammar, corpus, threads):
    """Corpus E-step: merged counts, log-likelihood, skipped-sentence count.

    Per-sentence results are merged in corpus order whatever the thread
    count, keeping the reduction deterministic.
    """
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda s: _sentence_estep(grammar, s), corpus))
    else:
        results = [_sentence_estep(grammar, s) for s in corpus]
    counts = np.zeros(len(grammar.rules()))
    ll = 0.0
    skipped = 0
    for res in results:
        if res is None:
            skipped += 1
        else:
            ll += res[0]
            counts += res[1]
    return counts, ll, skipped


def coverage(grammar, corpus, threads=1):
    """Fraction of corpus sentences with at least one parse."""
    def parses(tokens):
        try:
            return cyk_fill(grammar, tokens).sentence_logprob() != NEG_INF
        except ParseError:
            return False

    if not corpus:
        return 0.0
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            flags = list(pool.map(parses, corpus))
    else:
        flags = [parses(s) for s in corpus]
    return sum(flags) / len(corpus)


def train(grammar, corpus, config=None, threads=1):
    """Run inside-outside re-estimation until the corpus log-likelihood
    stabilises or the iteration cap is reached."""
    config = config or TrainConfig()
    config.validate()
    corpus = [list(s) for s in corpus]
    if not corpus:
        raise ValueError("empty training corpus")

    report = TrainReport()
    report.coverage_before = coverage(grammar, corpus, threads)
    if report.coverage_before == 0.0:
        raise NoParseError("no sentence in the corpus is parseable by the grammar")
    if not config.skip_unparseable and report.coverage_before < 1.0:
        raise NoParseError("corpus contains unparseable sentences")

    current = grammar
    prev_ll = None
    for it in range(1, config.max_iterations + 1):
        counts, ll, skipped = _estep(current, corpus, threads)
        report.log_likelihoods.append(ll)
        report.skipped = skipped
        current = reestimate(current, counts)
        current, pruned = prune(current, config.prune_threshold)
        ne, ni = current.nonzero_counts()
        report.nonzero_rules.append(ne + ni)
        if pruned:
            report.prune_events.append(it)
        report.iterations = it
        if prev_ll is not None and abs(ll - prev_ll) <= config.convergence_tol * abs(prev_ll):
            report.converged = True
            break
        prev_ll = ll

    report.grammar = current
    report.coverage_after = coverage(current, corpus, threads)
    return report


def log_likelihood(grammar, corpus):
    """Total natural-log likelihood of the parseable corpus subset.

    Returns (log-likelihood, unparseable-sentence count).
    """
    total = 0.0
    skipped = 0
    for tokens in corpus:
        try:
            lp = cyk_fill(grammar, tokens).sentence_logprob()
        except ParseError:
            lp = NEG_INF
        if lp == NEG_INF:
            skipped += 1
        else:
            total += lp
    return total, skipped


# ---------------------------------------------------------------------------
# Rule-per-line serialisation (the trained-grammar interchange format)

def save_rules(grammar, path, include_zero=False):
    """Write one rule per line:

        M --> D1 D2 <prob> <explicit|implicit>
        M --> word # <prob> <explicit|implicit>
    """
    lines = []
    for r in grammar.binary:
        if include_zero or r.prob > 0.0:
            lines.append("%s --> %s %s %.8f %s" % (r.mother, r.left, r.right, r.prob, r.origin))
    for r in grammar.lexical:
        if include_zero or r.prob > 0.0:
            lines.append("%s --> %s # %.8f %s" % (r.mother, r.word, r.prob, r.origin))
    text = "\n".join(lines) + "\n"
    with open(path, "w") as fh:
        fh.write(text)


def parse_rules(text, root=None):
    """Load a rule-per-line grammar; '#' lines and blank lines are ignored.

    Probabilities are taken verbatim (no renormalisation), so fixtures round
    -trip exactly.  The default root is the first rule's mother.
    """
    binary, lexical = [], []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 6 or parts[1] != "-->":
            raise GrammarError("bad rule line: %r" % line, lineno)
        mother, _, d1, d2, prob_s, origin = parts
        if origin not in ("explicit", "implicit"):
            raise GrammarError("bad origin %r" % origin, lineno)
        prob = float(prob_s)
        if prob < 0.0 or prob > 1.0:
            raise GrammarError("probability %g outside [0, 1]" % prob, lineno)
        if d2 == "#":
            lexical.append(LexRule(mother, d1, prob, origin))
        else:
            binary.append(BinaryRule(mother, d1, d2, prob, origin))
    if not binary and not lexical:
        raise GrammarError("no rules found")

    nts, seen = [], set()
    for r in binary:
        for sym in (r.mother, r.left, r.right):
            if sym not in seen:
                seen.add(sym)
                nts.append(sym)
    for r in lexical:
        if r.mother not in seen:
            seen.add(r.mother)
            nts.append(r.mother)
    terms, seen_t = [], set()
    for r in lexical:
        if r.word not in seen_t:
            seen_t.add(r.word)
            terms.append(r.word)
    if root is None:
        root = binary[0].mother if binary else lexical[0].mother
    return CnfGrammar(nts, terms, binary, lexical, root)


def load_rules(path, root=None):
    with open(path) as fh:
        return parse_rules(fh.read(), root=root)
