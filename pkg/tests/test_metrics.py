import math
import random
from dataclasses import replace

import pytest
from hypothesis import given, settings

from treebench import conllu, metrics

import genutil
import oracles


def sent(heads, deprels, upos=None, forms=None, sent_id="s1"):
    n = len(heads)
    upos = upos or ["NOUN"] * n
    forms = forms or [f"w{i}" for i in range(1, n + 1)]
    toks = tuple(
        conllu.Token(id=i, form=forms[i - 1], upos=upos[i - 1], head=heads[i - 1], deprel=deprels[i - 1])
        for i in range(1, n + 1)
    )
    return conllu.Sentence(sent_id=sent_id, tokens=toks)


def bank(*sentences):
    return conllu.Treebank(tuple(sentences))


def test_attachment_hand_case():
    gold = bank(sent([2, 0, 2], ["nsubj", "root", "obj"]))
    system = bank(sent([2, 0, 1], ["obj", "root", "obj"]))
    score = metrics.attachment_scores(system, gold)
    assert score.matched == 3
    assert score.head_correct == 2
    assert score.head_and_label_correct == 1
    assert score.uas_f1 == pytest.approx(2 / 3)
    assert score.las_f1 == pytest.approx(1 / 3)


def test_attachment_identity_is_perfect():
    gold = bank(sent([2, 0, 2], ["nsubj", "root", "obj"]))
    score = metrics.attachment_scores(gold, gold)
    assert score.uas_f1 == score.las_f1 == 1.0
    assert score.uas_p == score.uas_r == 1.0


def test_attachment_ignore_punct():
    gold = bank(sent([2, 0, 2], ["nsubj", "root", "punct"], upos=["NOUN", "VERB", "PUNCT"]))
    system = bank(sent([2, 0, 1], ["nsubj", "root", "punct"], upos=["NOUN", "VERB", "PUNCT"]))
    score = metrics.attachment_scores(system, gold, ignore_punct=True)
    assert score.matched == score.system_total == score.gold_total == 2
    assert score.uas_f1 == 1.0


def test_attachment_strip_subtypes():
    gold = bank(sent([0, 1], ["root", "nmod:poss"]))
    system = bank(sent([0, 1], ["root", "nmod"]))
    assert metrics.attachment_scores(system, gold).las_f1 < 1.0
    assert metrics.attachment_scores(system, gold, strip_subtypes=True).las_f1 == 1.0


def test_attachment_errors():
    one = bank(sent([0], ["root"]))
    two = bank(sent([0], ["root"]), sent([0], ["root"], sent_id="s2"))
    with pytest.raises(metrics.MetricsError, match="mismatch"):
        metrics.attachment_scores(one, two)
    with pytest.raises(metrics.MetricsError, match="empty"):
        metrics.attachment_scores(conllu.Treebank(), conllu.Treebank())


def test_sent_id_mismatch_warns_but_scores():
    a = bank(sent([0], ["root"], sent_id="a"))
    b = bank(sent([0], ["root"], sent_id="b"))
    with pytest.warns(UserWarning, match="sent_id mismatch"):
        score = metrics.attachment_scores(a, b)
    assert score.uas_f1 == 1.0


def test_kappa_hand_case():
    a = bank(sent([2, 0, 2, 0, 2], ["nsubj", "obj", "obj", "root", "punct"], sent_id="k"))
    b = bank(sent([2, 0, 2, 0, 2], ["nsubj", "obl", "obj", "root", "punct"], sent_id="k"))
    # Only labels matter for kappa; heads here are arbitrary but identical.
    r = metrics.cohen_kappa(a, b)
    assert r.observed_agreement == pytest.approx(0.8)
    assert r.expected_agreement == pytest.approx(0.2)
    assert r.kappa == pytest.approx(0.75)
    assert r.item_count == 5
    assert not r.degenerate


def test_kappa_identity_two_labels():
    a = bank(sent([0, 1], ["root", "obj"]))
    assert metrics.cohen_kappa(a, a).kappa == pytest.approx(1.0)


def test_kappa_degenerate_constant_annotations():
    a = bank(sent([0], ["root"]))
    r = metrics.cohen_kappa(a, a)
    assert r.degenerate
    assert math.isnan(r.kappa)
    assert r.observed_agreement == 1.0


def test_confusion_hand_case():
    gold = bank(sent([2, 0, 2], ["nsubj", "root", "obj"]))
    system = bank(sent([2, 0, 1], ["obj", "root", "obj"]))
    cm = metrics.confusion_matrix(system, gold)
    assert cm.cell("nsubj", "obj") == 1
    assert cm.cell("root", "root") == 1
    assert cm.cell("obj", "obj") == 1
    assert cm.total() == 3


def test_confusion_identity_is_diagonal():
    gold = bank(sent([2, 0, 2], ["nsubj", "root", "obj"]))
    cm = metrics.confusion_matrix(gold, gold)
    assert cm.diagonal() == cm.total() == 3


def test_confusion_diagonal_matches_kappa_po():
    rng = random.Random(7)
    gold = genutil.random_treebank(rng)
    system = genutil.perturbed_copy(rng, gold)
    cm = metrics.confusion_matrix(system, gold)
    kap = metrics.cohen_kappa(system, gold)
    assert cm.diagonal() / cm.total() == pytest.approx(kap.observed_agreement)


def test_confusion_top_k_buckets_rare_labels():
    gold = bank(sent([0, 1, 1, 1], ["root", "obj", "amod", "det"]))
    system = bank(sent([0, 1, 1, 1], ["root", "obj", "obl", "case"]))
    cm = metrics.confusion_matrix(system, gold, top_k=2)
    assert cm.labels[-1] == "OTHER"
    assert len(cm.labels) == 3
    assert cm.total() == 4


def test_confusion_csv_layout():
    gold = bank(sent([0, 1], ["root", "obj"]))
    cm = metrics.confusion_matrix(gold, gold)
    lines = cm.to_csv().strip().split("\n")
    assert lines[0] == "gold\\system,obj,root"
    assert lines[1] == "obj,1,0"
    assert lines[2] == "root,0,1"


# Properties ------------------------------------------------------------------

@settings(max_examples=50, deadline=None)
@given(genutil.treebank_pairs())
def test_las_never_exceeds_uas(pair):
    system, gold = pair
    score = metrics.attachment_scores(system, gold)
    assert score.las_f1 <= score.uas_f1 + 1e-12
    assert score.head_and_label_correct <= score.head_correct <= score.matched
    assert score.matched <= min(score.system_total, score.gold_total)


@settings(max_examples=50, deadline=None)
@given(genutil.treebank_pairs())
def test_swapping_sides_swaps_p_and_r(pair):
    system, gold = pair
    ab = metrics.attachment_scores(system, gold)
    ba = metrics.attachment_scores(gold, system)
    assert ab.uas_p == pytest.approx(ba.uas_r)
    assert ab.uas_r == pytest.approx(ba.uas_p)
    assert ab.uas_f1 == pytest.approx(ba.uas_f1)
    assert ab.las_f1 == pytest.approx(ba.las_f1)


@settings(max_examples=50, deadline=None)
@given(genutil.treebank_pairs())
def test_kappa_symmetric(pair):
    a, b = pair
    ra = metrics.cohen_kappa(a, b)
    rb = metrics.cohen_kappa(b, a)
    if ra.degenerate:
        assert rb.degenerate
    else:
        assert ra.kappa == pytest.approx(rb.kappa)


@settings(max_examples=40, deadline=None)
@given(genutil.treebank_pairs())
def test_kappa_invariant_under_label_bijection(pair):
    a, b = pair
    table = {l: f"L{i}" for i, l in enumerate(sorted(set(genutil.LABELS) | {"root"}))}

    def relabel(tb):
        return conllu.Treebank(tuple(
            replace(s, tokens=tuple(
                replace(t, deprel=table[t.deprel]) for t in s.tokens
            )) for s in tb.sentences
        ))

    before = metrics.cohen_kappa(a, b)
    after = metrics.cohen_kappa(relabel(a), relabel(b))
    if before.degenerate:
        assert after.degenerate
    else:
        assert before.kappa == pytest.approx(after.kappa)


@settings(max_examples=50, deadline=None)
@given(genutil.treebank_pairs())
def test_confusion_transpose(pair):
    a, b = pair
    assert metrics.confusion_matrix(a, b).transposed() == metrics.confusion_matrix(b, a)


@settings(max_examples=50, deadline=None)
@given(genutil.treebank_pairs())
def test_oracle_equivalence_properties(pair):
    system, gold = pair
    score = metrics.attachment_scores(system, gold)
    assert score.as_dict() == pytest.approx(oracles.naive_attachment(system, gold))


def test_oracle_equivalence_bulk_with_flags():
    rng = random.Random(20260809)
    for trial in range(60):
        gold = genutil.random_treebank(rng)
        system = genutil.perturbed_copy(rng, gold)
        ip = trial % 2 == 0
        ss = trial % 3 == 0
        got = metrics.attachment_scores(system, gold, ignore_punct=ip, strip_subtypes=ss)
        want = oracles.naive_attachment(system, gold, ignore_punct=ip, strip_subtypes=ss)
        for key, val in want.items():
            assert getattr(got, key) == pytest.approx(val, abs=1e-12), key
        got_k = metrics.cohen_kappa(system, gold, ignore_punct=ip, strip_subtypes=ss)
        want_k = oracles.naive_kappa(system, gold, ignore_punct=ip, strip_subtypes=ss)
        assert got_k.observed_agreement == pytest.approx(want_k["observed_agreement"], abs=1e-12)
        assert got_k.expected_agreement == pytest.approx(want_k["expected_agreement"], abs=1e-12)
        if want_k["kappa"] is None:
            assert got_k.degenerate
        else:
            assert got_k.kappa == pytest.approx(want_k["kappa"], abs=1e-12)
        got_c = metrics.confusion_matrix(system, gold, ignore_punct=ip, strip_subtypes=ss)
        want_c = oracles.naive_confusion(system, gold, ignore_punct=ip, strip_subtypes=ss)
        for gi, g in enumerate(got_c.labels):
            for pi, p in enumerate(got_c.labels):
                assert got_c.counts[gi][pi] == want_c.get((g, p), 0)
        assert got_c.total() == sum(want_c.values())
