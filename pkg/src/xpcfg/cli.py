"""Command-line front end: compile, implicit-expand, generate, train, parse,
count, entropy and eval subcommands over line-oriented text files.

Every subcommand that writes an output file also writes a sibling
``<output>.manifest.json`` recording the subcommand, input paths, seed,
configuration and toolkit version, sufficient to reproduce the artifact.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from . import __version__
from .chart import (
    NoParseError,
    ParseError,
    cyk_fill,
    format_report,
    format_tree,
    parse_report,
    unconstrained_count,
)
from .constraints import build_implicit_grammar, enumerate_implicit
from .generate import GenConfig, corpus_to_text, load_corpus, sample_corpus, sample_palindromes
from .grammar import GrammarError, compile_cnf, parse_grammar
from .metrics import entropy
from .scoring import evaluate_corpus, format_corpus_score, load_gold_trees
from .training import TrainConfig, parse_rules, save_rules, train


def _detect_and_load_grammar(path, root=None):
    """Load either a grammar-formalism file or a rule-per-line file.

    Formalism files start with a declaration keyword; rule files consist of
    'M --> ...' lines.  Formalism files are compiled (explicit rules only);
    use the implicit subcommand to add constraint-licensed rules.
    """
    with open(path) as fh:
        text = fh.read()
    for line in text.splitlines():
        stripped = line.strip()
        if not stripped or stripped.startswith(("#", ";")):
            continue
        keyword = stripped.split()[0]
        if keyword in ("FEATURE", "ALIAS", "PSRULE", "WORD", "CONSTRAINT"):
            return compile_cnf(parse_grammar(text), root=root)
        break
    return parse_rules(text, root=root)


def _write_manifest(out_path, subcommand, args, started):
    config = {k: v for k, v in vars(args).items() if k not in ("func",)}
    manifest = {
        "subcommand": subcommand,
        "inputs": {k: v for k, v in config.items()
                   if k in ("grammar", "corpus", "gold") and v is not None},
        "seed": config.get("seed"),
        "config": config,
        "toolkit_version": __version__,
        "wall_clock_seconds": round(time.time() - started, 3),
    }
    with open(out_path + ".manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_compile(args):
    started = time.time()
    cnf = _detect_and_load_grammar(args.grammar, root=args.root)
    ne, ni = cnf.nonzero_counts()
    print("%d nonterminals, %d terminals, %d rules (root %s)"
          % (len(cnf.nonterminals), len(cnf.terminals), ne + ni, cnf.root))
    if args.output:
        save_rules(cnf, args.output)
        _write_manifest(args.output, "compile", args, started)
    return 0


def cmd_implicit(args):
    started = time.time()
    with open(args.grammar) as fh:
        g = parse_grammar(fh.read())
    cnf = compile_cnf(g, root=args.root)
    implicit = enumerate_implicit(cnf, g.constraints)
    if args.list_only:
        lines = ["%s --> %s %s  implicit" % (c.mother, c.d1, c.d2) for c in implicit]
        text = "\n".join(lines) + "\n"
        if args.output:
            with open(args.output, "w") as fh:
                fh.write(text)
            _write_manifest(args.output, "implicit", args, started)
        else:
            sys.stdout.write(text)
        print("%d implicit rules licensed" % len(implicit))
        return 0
    ig = build_implicit_grammar(cnf, implicit, floor=args.floor, init=args.init, seed=args.seed)
    ne, ni = ig.nonzero_counts()
    print("%d rules: %d explicit + %d implicit" % (ne + ni, ne, ni))
    if args.output:
        save_rules(ig, args.output)
        _write_manifest(args.output, "implicit", args, started)
    return 0


def cmd_generate(args):
    started = time.time()
    cnf = _detect_and_load_grammar(args.grammar, root=args.root)
    config = GenConfig(count=args.count, seed=args.seed,
                       max_depth=args.max_depth, max_length=args.max_length)
    corpus = sample_corpus(cnf, config)
    text = corpus_to_text(corpus)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
        _write_manifest(args.output, "generate", args, started)
    else:
        sys.stdout.write(text)
    print("%d sentences, %d tokens" % (len(corpus), sum(len(s) for s in corpus)), file=sys.stderr)
    return 0


def cmd_palindromes(args):
    started = time.time()
    corpus = sample_palindromes(args.count, seed=args.seed)
    text = corpus_to_text(corpus)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
        _write_manifest(args.output, "palindromes", args, started)
    else:
        sys.stdout.write(text)
    return 0


def cmd_train(args):
    started = time.time()
    cnf = _detect_and_load_grammar(args.grammar, root=args.root)
    corpus = load_corpus(args.corpus)
    config = TrainConfig(max_iterations=args.max_iter, convergence_tol=args.tol,
                         prune_threshold=args.prune)
    report = train(cnf, corpus, config, threads=args.threads)
    for i, ll in enumerate(report.log_likelihoods, start=1):
        print("iteration %d: log-likelihood %.6f, %d nonzero rules"
              % (i, ll, report.nonzero_rules[i - 1]))
    ne, ni = report.grammar.nonzero_counts()
    print("%s after %d iterations: %d nonzero rules (%d explicit + %d implicit)"
          % ("converged" if report.converged else "stopped",
             report.iterations, ne + ni, ne, ni))
    print("coverage: %.1f%% before, %.1f%% after; skipped %d"
          % (100 * report.coverage_before, 100 * report.coverage_after, report.skipped))
    if args.output:
        save_rules(report.grammar, args.output)
        _write_manifest(args.output, "train", args, started)
    return 0


def cmd_parse(args):
    started = time.time()
    cnf = _detect_and_load_grammar(args.grammar, root=args.root)
    corpus = load_corpus(args.corpus)

    def one(tokens):
        try:
            return parse_report(cnf, tokens)
        except (ParseError, NoParseError) as exc:
            return exc

    if args.threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            reports = list(pool.map(one, corpus))
    else:
        reports = [one(tokens) for tokens in corpus]

    out = []
    for tokens, report in zip(corpus, reports):
        out.append(" ".join(tokens))
        if isinstance(report, Exception):
            out.append("no parse: %s" % report)
        else:
            out.append(format_tree(report.tree, style=args.format))
            out.append(format_report(report))
        out.append("")
    text = "\n".join(out)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
        _write_manifest(args.output, "parse", args, started)
    else:
        sys.stdout.write(text)
    return 0


def cmd_count(args):
    if args.unconstrained:
        n, nts = args.unconstrained
        print(unconstrained_count(n, nts))
        return 0
    if not (args.grammar and args.corpus):
        raise SystemExit("count needs either --unconstrained N NTS or --grammar and --corpus")
    cnf = _detect_and_load_grammar(args.grammar, root=args.root)
    for tokens in load_corpus(args.corpus):
        try:
            chart = cyk_fill(cnf, tokens)
            n = chart.count(0, chart.n, cnf.root)
        except ParseError:
            n = 0
        print("%d\t%s" % (n, " ".join(tokens)))
    return 0


def cmd_entropy(args):
    cnf = _detect_and_load_grammar(args.grammar, root=args.root)
    report = entropy(cnf, load_corpus(args.corpus))
    print("%-24s %8s %8s" % ("", "H3a", "H3b"))
    print("%-24s %8.4f %8.4f" % (args.label, report.h3a, report.h3b))
    if report.skipped:
        print("(%d unparseable sentences excluded)" % report.skipped)
    return 0


def cmd_eval(args):
    cnf = _detect_and_load_grammar(args.grammar, root=args.root)
    gold = load_gold_trees(args.gold)
    score = evaluate_corpus(cnf, gold, threads=args.threads)
    print(format_corpus_score(score))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="xpcfg",
        description="Compile feature grammars to CNF PCFGs, license implicit rules, "
                    "train inside-outside, parse and evaluate.")
    parser.add_argument("--version", action="version", version="xpcfg " + __version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(func=fn)
        return p

    p = add("compile", cmd_compile, help="compile a grammar file to CNF rules")
    p.add_argument("--grammar", required=True)
    p.add_argument("--root", default=None)
    p.add_argument("-o", "--output", default=None)

    p = add("implicit", cmd_implicit, help="add constraint-licensed implicit rules")
    p.add_argument("--grammar", required=True)
    p.add_argument("--root", default=None)
    p.add_argument("--floor", type=float, default=0.01)
    p.add_argument("--init", choices=["deterministic", "seeded-random"],
                   default="deterministic")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--list-only", action="store_true",
                   help="dump the licensed rule list instead of a grammar")
    p.add_argument("-o", "--output", default=None)

    p = add("generate", cmd_generate, help="sample sentences from a grammar")
    p.add_argument("--grammar", required=True)
    p.add_argument("--root", default=None)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--max-depth", type=int, default=100)
    p.add_argument("--max-length", type=int, default=100)
    p.add_argument("-o", "--output", default=None)

    p = add("palindromes", cmd_palindromes, help="sample from the mirror language")
    p.add_argument("--count", type=int, default=200)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("-o", "--output", default=None)

    p = add("train", cmd_train, help="inside-outside re-estimation on a corpus")
    p.add_argument("--grammar", required=True)
    p.add_argument("--root", default=None)
    p.add_argument("--corpus", required=True)
    p.add_argument("--max-iter", type=int, default=30)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--prune", type=float, default=1e-5)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("-o", "--output", default=None)

    p = add("parse", cmd_parse, help="Viterbi-parse sentences and report stats")
    p.add_argument("--grammar", required=True)
    p.add_argument("--root", default=None)
    p.add_argument("--corpus", required=True)
    p.add_argument("--format", choices=["paren", "appendix3"], default="paren")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("-o", "--output", default=None)

    p = add("count", cmd_count, help="derivation counts, exact")
    p.add_argument("--unconstrained", nargs=2, type=int, metavar=("N", "NTS"),
                   default=None, help="Catalan(N-1) * NTS**(N-1)")
    p.add_argument("--grammar", default=None)
    p.add_argument("--root", default=None)
    p.add_argument("--corpus", default=None)

    p = add("entropy", cmd_entropy, help="per-word entropy of a corpus under a grammar")
    p.add_argument("--grammar", required=True)
    p.add_argument("--root", default=None)
    p.add_argument("--corpus", required=True)
    p.add_argument("--label", default="corpus")

    p = add("eval", cmd_eval, help="bracket recall/precision/crossings against gold trees")
    p.add_argument("--grammar", required=True)
    p.add_argument("--root", default=None)
    p.add_argument("--gold", required=True)
    p.add_argument("--threads", type=int, default=1)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (GrammarError, ParseError, NoParseError, ValueError, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
