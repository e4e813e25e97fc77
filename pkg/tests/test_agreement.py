import random
from dataclasses import replace

import pytest

from treebench import agreement, conllu, metrics

import genutil


def sent(sid, deprels, heads=None):
    n = len(deprels)
    heads = heads or ([0] + [1] * (n - 1))
    toks = tuple(
        conllu.Token(id=i, form=f"w{i}", head=heads[i - 1], deprel=deprels[i - 1])
        for i in range(1, n + 1)
    )
    return conllu.Sentence(sent_id=sid, tokens=toks)


def study_of(a_sents, b_sents):
    return agreement.build_study({
        "anna": conllu.Treebank(tuple(a_sents)),
        "berk": conllu.Treebank(tuple(b_sents)),
    })


def test_identical_annotations_agree_perfectly():
    s = [sent("s1", ["root", "obj", "obl"]), sent("s2", ["root", "nsubj"])]
    study = study_of(s, s)
    report = agreement.agreement_report(study)
    assert report.kappa.kappa == pytest.approx(1.0)
    assert report.attachment.uas_f1 == 1.0
    assert report.attachment.las_f1 == 1.0
    assert agreement.list_disagreements(study) == []


def test_hand_kappa_case_flows_through():
    a = [sent("k1", ["nsubj", "obj", "obj", "root", "punct"], heads=[4, 4, 4, 0, 4])]
    b = [sent("k1", ["nsubj", "obl", "obj", "root", "punct"], heads=[4, 4, 4, 0, 4])]
    report = agreement.agreement_report(study_of(a, b))
    assert report.kappa.observed_agreement == pytest.approx(0.8)
    assert report.kappa.expected_agreement == pytest.approx(0.2)
    assert report.kappa.kappa == pytest.approx(0.75)


def test_single_label_difference_gives_one_row():
    a = [sent("s1", ["root", "obj"])]
    b = [sent("s1", ["root", "obl"])]
    study = study_of(a, b)
    rows = agreement.list_disagreements(study)
    assert len(rows) == 1
    assert rows[0].sentence_id == "s1"
    assert rows[0].token_id == 2
    assert (rows[0].a_deprel, rows[0].b_deprel) == ("obj", "obl")


def test_rows_sorted_and_arithmetically_consistent():
    rng = random.Random(99)
    gold = genutil.random_treebank(rng, max_sentences=8)
    other = genutil.perturbed_copy(rng, gold)
    study = agreement.build_study({"a": other, "b": gold})
    rows = agreement.list_disagreements(study)

    order = [(r.sentence_id, r.token_id) for r in rows]
    assert order == sorted(order)

    label_diff_rows = sum(r.a_deprel.casefold() != r.b_deprel.casefold() for r in rows)
    kappa = metrics.cohen_kappa(other, gold)
    agreements = round(kappa.observed_agreement * kappa.item_count)
    assert label_diff_rows == kappa.item_count - agreements


def test_no_rows_iff_perfect_agreement():
    rng = random.Random(5)
    gold = genutil.random_treebank(rng, max_sentences=5)
    study = agreement.build_study({"a": gold, "b": gold})
    report = agreement.agreement_report(study)
    assert agreement.list_disagreements(study) == []
    assert report.kappa.observed_agreement == 1.0
    assert report.attachment.uas_f1 == 1.0


def test_incomplete_annotation_names_missing_ids():
    a = [sent("s1", ["root"]), sent("s2", ["root"])]
    b = [sent("s1", ["root"])]
    with pytest.raises(agreement.AgreementError, match="missing sentences: s2"):
        study_of(a, b)


def test_mismatched_forms_rejected():
    a = [sent("s1", ["root", "obj"])]
    b_sent = sent("s1", ["root", "obj"])
    b_sent = replace(b_sent, tokens=(
        b_sent.tokens[0], replace(b_sent.tokens[1], form="different"),
    ))
    with pytest.raises(agreement.AgreementError, match="FORM sequence"):
        study_of(a, [b_sent])


def test_symmetry_up_to_pr_swap():
    rng = random.Random(42)
    gold = genutil.random_treebank(rng, max_sentences=6)
    other = genutil.perturbed_copy(rng, gold)
    r_ab = agreement.agreement_report(agreement.build_study({"a": other, "b": gold}))
    r_ba = agreement.agreement_report(agreement.build_study({"a": gold, "b": other}))
    assert r_ab.kappa.kappa == pytest.approx(r_ba.kappa.kappa)
    assert r_ab.attachment.uas_f1 == pytest.approx(r_ba.attachment.uas_f1)
    assert r_ab.attachment.uas_p == pytest.approx(r_ba.attachment.uas_r)


def test_csv_emission():
    a = [sent("s1", ["root", "obj"])]
    b = [sent("s1", ["root", "obl"])]
    text = agreement.disagreements_csv(study_of(a, b))
    lines = text.strip().split("\n")
    assert lines[0] == "sentence_id,token_id,anna_head,anna_deprel,berk_head,berk_deprel"
    assert lines[1] == "s1,2,1,obj,1,obl"


def test_study_from_files(tmp_path):
    a = conllu.Treebank((sent("s1", ["root", "obj"]),))
    b = conllu.Treebank((sent("s1", ["root", "obl"]),))
    conllu.write_file(a, tmp_path / "anna.conllu")
    conllu.write_file(b, tmp_path / "berk.conllu")
    study = agreement.study_from_files(tmp_path / "anna.conllu", tmp_path / "berk.conllu")
    assert study.annotator_pair() == ("anna", "berk")
    assert len(agreement.list_disagreements(study)) == 1
