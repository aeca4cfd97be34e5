import json

import pytest

from xpcfg import fixtures
from xpcfg.cli import main


@pytest.fixture()
def xbar_path(tmp_path):
    p = tmp_path / "xbar.gr"
    p.write_text(fixtures.xbar_text())
    return str(p)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestCompile:
    def test_summary(self, capsys, xbar_path):
        code, out, _ = run(capsys, "compile", "--grammar", xbar_path)
        assert code == 0
        assert "11 nonterminals, 20 terminals, 27 rules (root V2)" in out

    def test_root_flag(self, capsys, xbar_path):
        code, out, _ = run(capsys, "compile", "--grammar", xbar_path, "--root", "V1")
        assert code == 0
        assert "root V1" in out

    def test_bad_path(self, capsys):
        code, _, err = run(capsys, "compile", "--grammar", "/nonexistent/g.gr")
        assert code == 1
        assert "error:" in err

    def test_writes_rules_and_manifest(self, capsys, xbar_path, tmp_path):
        out_path = tmp_path / "xbar.rules"
        code, _, _ = run(capsys, "compile", "--grammar", xbar_path, "-o", str(out_path))
        assert code == 0
        assert out_path.exists()
        manifest = json.loads((tmp_path / "xbar.rules.manifest.json").read_text())
        assert manifest["subcommand"] == "compile"
        assert manifest["toolkit_version"]
        assert manifest["inputs"]["grammar"] == xbar_path


class TestImplicit:
    def test_summary(self, capsys, xbar_path):
        code, out, _ = run(capsys, "implicit", "--grammar", xbar_path, "--floor", "0.01")
        assert code == 0
        assert "126 rules: 27 explicit + 99 implicit" in out

    def test_floor_too_large(self, capsys, xbar_path):
        code, _, err = run(capsys, "implicit", "--grammar", xbar_path, "--floor", "0.04")
        assert code == 1
        assert "floor mass" in err

    def test_seeded_random_same_rules_different_probs(self, capsys, xbar_path, tmp_path):
        a, b = tmp_path / "a.rules", tmp_path / "b.rules"
        run(capsys, "implicit", "--grammar", xbar_path, "--init", "seeded-random",
            "--seed", "1", "-o", str(a))
        run(capsys, "implicit", "--grammar", xbar_path, "--init", "seeded-random",
            "--seed", "2", "-o", str(b))
        rules_a = [line.split()[:5] for line in a.read_text().splitlines()]
        rules_b = [line.split()[:5] for line in b.read_text().splitlines()]
        assert [r[:4] for r in rules_a] == [r[:4] for r in rules_b]
        assert rules_a != rules_b

    def test_list_only(self, capsys, xbar_path):
        code, out, _ = run(capsys, "implicit", "--grammar", xbar_path, "--list-only")
        assert code == 0
        lines = [l for l in out.splitlines() if "-->" in l]
        assert len(lines) == 99
        assert all(l.endswith("implicit") for l in lines)
        assert "V2 --> A1 V2  implicit" in lines


class TestCount:
    def test_unconstrained(self, capsys):
        code, out, _ = run(capsys, "count", "--unconstrained", "20", "10")
        assert code == 0
        assert out.strip() == "17672631900000000000000000000"

    def test_corpus_counts(self, capsys, xbar_path, tmp_path):
        corpus = tmp_path / "c.txt"
        corpus.write_text("the cat chases the ball\nchases chases\n")
        code, out, _ = run(capsys, "count", "--grammar", xbar_path, "--corpus", str(corpus))
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0].startswith("1\t")
        assert lines[1].startswith("0\t")

    def test_needs_arguments(self, capsys):
        with pytest.raises(SystemExit):
            main(["count"])


class TestGenerateTrainParse:
    def test_generate_deterministic_with_manifest(self, capsys, xbar_path, tmp_path):
        a, b = tmp_path / "a.txt", tmp_path / "b.txt"
        run(capsys, "generate", "--grammar", xbar_path, "--count", "30",
            "--seed", "9", "-o", str(a))
        run(capsys, "generate", "--grammar", xbar_path, "--count", "30",
            "--seed", "9", "-o", str(b))
        assert a.read_text() == b.read_text()
        manifest = json.loads((tmp_path / "a.txt.manifest.json").read_text())
        assert manifest["seed"] == 9

    def test_palindromes(self, capsys, tmp_path):
        out_path = tmp_path / "pal.txt"
        code, _, _ = run(capsys, "palindromes", "--count", "20", "--seed", "3",
                         "-o", str(out_path))
        assert code == 0
        for line in out_path.read_text().splitlines():
            toks = line.split()
            assert toks == toks[::-1]

    def test_pipeline_train_parse_eval(self, capsys, xbar_path, tmp_path):
        corpus = tmp_path / "corpus.txt"
        implicit = tmp_path / "implicit.rules"
        model = tmp_path / "model.rules"

        run(capsys, "generate", "--grammar", xbar_path, "--count", "40",
            "--seed", "1", "-o", str(corpus))
        run(capsys, "implicit", "--grammar", xbar_path, "-o", str(implicit))
        code, out, _ = run(capsys, "train", "--grammar", str(implicit),
                           "--corpus", str(corpus), "--max-iter", "3",
                           "-o", str(model))
        assert code == 0
        assert "iteration 1:" in out
        assert model.exists()
        assert json.loads((tmp_path / "model.rules.manifest.json").read_text())

        code, out, _ = run(capsys, "parse", "--grammar", str(model),
                           "--corpus", str(corpus))
        assert code == 0
        assert "best " in out and " likelihood " in out and " count " in out
        assert out.count("(V2") >= 1

        code, out, _ = run(capsys, "parse", "--grammar", str(model),
                           "--corpus", str(corpus), "--format", "appendix3")
        assert code == 0
        assert "[V2 " in out

        code, out, _ = run(capsys, "entropy", "--grammar", str(model),
                           "--corpus", str(corpus), "--label", "trained")
        assert code == 0
        assert "H3a" in out and "trained" in out

        # self-evaluation: gold trees are the grammar's own parses
        gold = tmp_path / "gold.txt"
        from xpcfg.chart import cyk_fill, tree_to_paren, viterbi_parse
        from xpcfg.generate import load_corpus
        from xpcfg.training import load_rules

        g = load_rules(str(model), root="V2")
        lines = [tree_to_paren(viterbi_parse(cyk_fill(g, s), g)[0])
                 for s in load_corpus(str(corpus))]
        gold.write_text("\n".join(lines) + "\n")
        code, out, _ = run(capsys, "eval", "--grammar", str(model), "--gold", str(gold))
        assert code == 0
        assert "Total Recall (%)" in out
        assert "100.00" in out

    def test_no_parse_reported(self, capsys, xbar_path, tmp_path):
        corpus = tmp_path / "c.txt"
        corpus.write_text("chases chases\n")
        code, out, _ = run(capsys, "parse", "--grammar", xbar_path,
                           "--corpus", str(corpus))
        assert code == 0
        assert "no parse" in out


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0


def test_parse_threads_identical_output(capsys, xbar_path, tmp_path):
    corpus = tmp_path / "c.txt"
    corpus.write_text("the cat chases the ball\nslowly slowly\nthe boy kisses the girl\n")
    _, seq, _ = run(capsys, "parse", "--grammar", xbar_path, "--corpus", str(corpus))
    _, par, _ = run(capsys, "parse", "--grammar", xbar_path, "--corpus", str(corpus),
                    "--threads", "3")
    assert seq == par


def test_train_continues_from_trained_model(capsys, xbar_path, tmp_path):
    # retraining takes whatever grammar file it is given, so continuing from
    # a previous model is just passing that model back in
    corpus = tmp_path / "c.txt"
    implicit = tmp_path / "implicit.rules"
    first = tmp_path / "first.rules"
    second = tmp_path / "second.rules"
    run(capsys, "generate", "--grammar", xbar_path, "--count", "30", "--seed", "2",
        "-o", str(corpus))
    run(capsys, "implicit", "--grammar", xbar_path, "-o", str(implicit))
    run(capsys, "train", "--grammar", str(implicit), "--corpus", str(corpus),
        "--max-iter", "2", "-o", str(first))
    code, out, _ = run(capsys, "train", "--grammar", str(first), "--corpus", str(corpus),
                       "--max-iter", "2", "-o", str(second))
    assert code == 0
    assert second.exists()
