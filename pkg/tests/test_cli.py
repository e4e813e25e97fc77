from pathlib import Path

import pytest
from click.testing import CliRunner

from treebench import conllu, refparser
from treebench.cli import main

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="module")
def corpus():
    return conllu.parse_file(DATA / "ud_sample.conllu")


@pytest.fixture(scope="module")
def runner():
    return CliRunner()


@pytest.fixture
def small_files(tmp_path, corpus):
    train = tmp_path / "train.conllu"
    pool = tmp_path / "pool.conllu"
    conllu.write_file(conllu.Treebank(corpus.sentences[:30]), train)
    conllu.write_file(conllu.Treebank(corpus.sentences[200:220]), pool)
    return train, pool


def test_full_cli_workflow(runner, tmp_path, small_files):
    train, pool = small_files
    model_dir = tmp_path / "base"
    r = runner.invoke(main, ["train", "--pool", str(train), "--out", str(model_dir), "--epochs", "2"])
    assert r.exit_code == 0, r.output
    assert "saved to" in r.output

    proj = tmp_path / "proj"
    r = runner.invoke(main, [
        "init", "--project", str(proj), "--pool", str(pool),
        "--base-model", str(model_dir), "--batch-size", "8",
        "--finetune-epochs", "1",
    ])
    assert r.exit_code == 0, r.output

    r = runner.invoke(main, ["next-batch", "--project", str(proj)])
    assert r.exit_code == 0, r.output
    assert "batch 0: 8 sentences" in r.output

    # One scripted edit, immediately visible in the draft.
    import json
    manifest = json.loads((proj / "project.json").read_text())
    sid = manifest["batches"][0]["sentence_ids"][0]
    r = runner.invoke(main, [
        "edit", "--project", str(proj), "--batch", "0", "--sentence", sid,
        "--token", "1", "--deprel", "obl", "--annotator", "cli-test",
    ])
    assert r.exit_code == 0, r.output

    r = runner.invoke(main, ["finalize", "--project", str(proj), "--batch", "0"])
    assert r.exit_code == 0, r.output
    assert "UAS F1" in r.output

    r = runner.invoke(main, ["finetune", "--project", str(proj), "--batch", "0"])
    assert r.exit_code == 0, r.output
    assert "models/iter001" in r.output

    r = runner.invoke(main, ["report", "--project", str(proj)])
    assert r.exit_code == 0, r.output
    assert "batch  size" in r.output

    r = runner.invoke(main, ["validate", "--project", str(proj)])
    assert r.exit_code == 0, r.output
    assert "OK" in r.output


def test_eval_kappa_confusion_commands(runner, tmp_path, corpus):
    a = tmp_path / "a.conllu"
    b = tmp_path / "b.conllu"
    tb = conllu.Treebank(corpus.sentences[:10])
    conllu.write_file(tb, a)
    flipped = conllu.Treebank(tuple(
        conllu.with_token(s, 1, deprel="obl") for s in tb.sentences
    ))
    conllu.write_file(flipped, b)

    r = runner.invoke(main, ["eval", str(b), str(a)])
    assert r.exit_code == 0, r.output
    assert "UAS" in r.output and "LAS" in r.output

    r = runner.invoke(main, ["kappa", str(a), str(b), "--disagreements", str(tmp_path / "d.csv")])
    assert r.exit_code == 0, r.output
    assert "kappa" in r.output
    assert (tmp_path / "d.csv").exists()

    r = runner.invoke(main, ["confusion", str(b), str(a), "--top-k", "3"])
    assert r.exit_code == 0, r.output
    assert r.output.startswith("gold\\system,")

    r = runner.invoke(main, ["--ignore-punct", "eval", str(b), str(a)])
    assert r.exit_code == 0
    assert "ignore_punct=True" in r.output


def test_validate_reports_violations(runner, tmp_path):
    bad = tmp_path / "bad.conllu"
    bad.write_text(
        "# sent_id = x\n"
        "1\ta\t_\t_\t_\t_\t2\tdep\t_\t_\n"
        "2\tb\t_\t_\t_\t_\t1\tdep\t_\t_\n\n",
        encoding="utf-8",
    )
    r = runner.invoke(main, ["validate", str(bad)])
    assert r.exit_code == 1
    assert "cycle" in r.output


def test_init_errors_are_clean(runner, tmp_path, small_files):
    train, pool = small_files
    r = runner.invoke(main, [
        "init", "--project", str(tmp_path / "p2"), "--pool", str(pool),
        "--base-model", str(tmp_path / "nope"),
    ])
    assert r.exit_code == 2  # click's exists=True check

    model_dir = tmp_path / "m"
    refparser.save(refparser.train(conllu.parse_file(train), epochs=1, seed=1), model_dir)
    target = tmp_path / "occupied"
    target.mkdir()
    (target / "x").write_text("")
    r = runner.invoke(main, [
        "init", "--project", str(target), "--pool", str(pool), "--base-model", str(model_dir),
    ])
    assert r.exit_code == 1
    assert "not empty" in r.output
