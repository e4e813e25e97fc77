"""Double-annotation studies: kappa, inter-annotator attachment, disagreements.

A study is two annotators' treebanks over the same sentences (identical FORM
sequences). Reports treat the first annotator as "system" and the second as
"gold", which only affects the precision/recall split, not the F1 or kappa.
Adjudication stays a human decision: the study can store an adjudicated
treebank but no merge logic exists here.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

from . import conllu, metrics


class AgreementError(Exception):
    pass


@dataclass(frozen=True)
class AgreementStudy:
    sentence_ids: tuple[str, ...]
    annotations: dict[str, conllu.Treebank]  # annotator id -> treebank
    adjudicated: conllu.Treebank | None = None

    def annotator_pair(self) -> tuple[str, str]:
        names = sorted(self.annotations)
        if len(names) != 2:
            raise AgreementError(f"agreement needs exactly two annotators, found {names}")
        return names[0], names[1]


@dataclass(frozen=True)
class Disagreement:
    sentence_id: str
    token_id: int
    a_head: int | None
    a_deprel: str
    b_head: int | None
    b_deprel: str


@dataclass(frozen=True)
class AgreementReport:
    annotator_a: str
    annotator_b: str
    kappa: metrics.KappaResult
    attachment: metrics.AttachmentScore
    ignore_punct: bool
    strip_subtypes: bool


def study_from_files(path_a, path_b, name_a: str | None = None, name_b: str | None = None,
                     adjudicated=None) -> AgreementStudy:
    a = conllu.parse_file(path_a)
    b = conllu.parse_file(path_b)
    return build_study({
        name_a or Path(path_a).stem: a,
        name_b or Path(path_b).stem: b,
    }, adjudicated=conllu.parse_file(adjudicated) if adjudicated else None)


def build_study(annotations: dict[str, conllu.Treebank],
                adjudicated: conllu.Treebank | None = None) -> AgreementStudy:
    names = sorted(annotations)
    if len(names) != 2:
        raise AgreementError(f"agreement needs exactly two annotators, found {names}")
    first = annotations[names[0]]
    sentence_ids = tuple(s.sent_id for s in first.sentences)
    _check_complete(annotations, sentence_ids)
    return AgreementStudy(sentence_ids, dict(annotations), adjudicated)


def _check_complete(annotations: dict[str, conllu.Treebank], sentence_ids: tuple[str, ...]) -> None:
    wanted = set(sentence_ids)
    for name, tb in annotations.items():
        have = {s.sent_id for s in tb.sentences}
        missing = sorted(wanted - have)
        if missing:
            raise AgreementError(f"annotator {name!r} is missing sentences: {', '.join(missing)}")
    a, b = (annotations[n] for n in sorted(annotations))
    for sid in sentence_ids:
        fa = tuple(t.form for t in a.sentence(sid).tokens)
        fb = tuple(t.form for t in b.sentence(sid).tokens)
        if fa != fb:
            raise AgreementError(f"annotators disagree on the FORM sequence of {sid}")


def _ordered(tb: conllu.Treebank, sentence_ids: tuple[str, ...]) -> conllu.Treebank:
    return conllu.Treebank(tuple(tb.sentence(sid) for sid in sentence_ids))


def agreement_report(study: AgreementStudy, ignore_punct: bool = False,
                     strip_subtypes: bool = False) -> AgreementReport:
    name_a, name_b = study.annotator_pair()
    a = _ordered(study.annotations[name_a], study.sentence_ids)
    b = _ordered(study.annotations[name_b], study.sentence_ids)
    kappa = metrics.cohen_kappa(a, b, ignore_punct=ignore_punct, strip_subtypes=strip_subtypes)
    attachment = metrics.attachment_scores(a, b, ignore_punct=ignore_punct,
                                           strip_subtypes=strip_subtypes)
    return AgreementReport(name_a, name_b, kappa, attachment, ignore_punct, strip_subtypes)


def list_disagreements(study: AgreementStudy) -> list[Disagreement]:
    """One row per token whose head or deprel differs; sentence then token order."""
    name_a, name_b = study.annotator_pair()
    a = study.annotations[name_a]
    b = study.annotations[name_b]
    rows: list[Disagreement] = []
    for sid in study.sentence_ids:
        sa, sb = a.sentence(sid), b.sentence(sid)
        for ta, tb in zip(sa.tokens, sb.tokens):
            if ta.head != tb.head or ta.deprel.casefold() != tb.deprel.casefold():
                rows.append(Disagreement(sid, ta.id, ta.head, ta.deprel, tb.head, tb.deprel))
    return rows


def disagreements_csv(study: AgreementStudy) -> str:
    name_a, name_b = study.annotator_pair()
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["sentence_id", "token_id",
                     f"{name_a}_head", f"{name_a}_deprel",
                     f"{name_b}_head", f"{name_b}_deprel"])
    for d in list_disagreements(study):
        writer.writerow([d.sentence_id, d.token_id, d.a_head, d.a_deprel, d.b_head, d.b_deprel])
    return buf.getvalue()


def format_report(report: AgreementReport) -> str:
    k = report.kappa
    kappa_str = "undefined (single shared label)" if k.degenerate else f"{k.kappa:.4f}"
    return "\n".join([
        f"annotators  {report.annotator_a} vs {report.annotator_b}",
        f"items       {k.item_count} aligned tokens",
        f"kappa       {kappa_str} (p_o={k.observed_agreement:.4f}, p_e={k.expected_agreement:.4f})",
        f"UAS F1      {report.attachment.uas_f1:.4f}",
        f"LAS F1      {report.attachment.las_f1:.4f}",
        f"flags       ignore_punct={report.ignore_punct} strip_subtypes={report.strip_subtypes}",
    ])
