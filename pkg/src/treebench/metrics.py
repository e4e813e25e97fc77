"""Attachment scores, Cohen's kappa, and label confusion between two annotations.

All three measurements run over the token alignment of paired sentences, so
they stay meaningful when the two sides tokenize differently; with identical
tokenization the precision/recall/F1 framing collapses to plain accuracy.
"""

from __future__ import annotations

import math
import warnings
from collections import Counter
from dataclasses import dataclass

from . import conllu


class MetricsError(Exception):
    pass


def _norm_label(deprel: str, strip_subtypes: bool) -> str:
    label = deprel.casefold()
    if strip_subtypes:
        label = label.split(":", 1)[0]
    return label


def _paired_sentences(system: conllu.Treebank, gold: conllu.Treebank):
    if len(system.sentences) == 0 or len(gold.sentences) == 0:
        raise MetricsError("cannot score an empty treebank")
    if len(system.sentences) != len(gold.sentences):
        raise MetricsError(
            f"sentence count mismatch: system has {len(system.sentences)}, gold has {len(gold.sentences)}"
        )
    for s_sys, s_gold in zip(system.sentences, gold.sentences):
        if s_sys.sent_id != s_gold.sent_id:
            warnings.warn(
                f"sent_id mismatch in paired sentences: {s_sys.sent_id!r} vs {s_gold.sent_id!r}",
                stacklevel=3,
            )
        yield s_sys, s_gold, conllu.align(s_sys, s_gold)


def _scoreable(t: conllu.Token, ignore_punct: bool) -> bool:
    return not (ignore_punct and t.upos == "PUNCT")


@dataclass(frozen=True)
class AttachmentScore:
    matched: int
    head_correct: int
    head_and_label_correct: int
    system_total: int
    gold_total: int
    uas_p: float
    uas_r: float
    uas_f1: float
    las_p: float
    las_r: float
    las_f1: float

    @classmethod
    def from_counts(cls, matched: int, head_correct: int, head_and_label_correct: int,
                    system_total: int, gold_total: int) -> "AttachmentScore":
        def prf(correct: int) -> tuple[float, float, float]:
            p = correct / system_total if system_total else 0.0
            r = correct / gold_total if gold_total else 0.0
            f1 = 2 * correct / (system_total + gold_total) if system_total + gold_total else 0.0
            return p, r, f1

        uas_p, uas_r, uas_f1 = prf(head_correct)
        las_p, las_r, las_f1 = prf(head_and_label_correct)
        return cls(matched, head_correct, head_and_label_correct, system_total, gold_total,
                   uas_p, uas_r, uas_f1, las_p, las_r, las_f1)

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def attachment_scores(system: conllu.Treebank, gold: conllu.Treebank,
                      ignore_punct: bool = False, strip_subtypes: bool = False) -> AttachmentScore:
    """Unlabeled/labeled attachment as F1 over aligned tokens.

    A pair scores for UAS when the two heads correspond under the alignment
    (or both attach to the artificial root); LAS additionally needs the same
    deprel after case-folding (and subtype stripping when requested). With
    ``ignore_punct`` every count skips punctuation on its own side, and
    aligned pairs are skipped when the gold side is punctuation.
    """
    matched = head_correct = both_correct = 0
    system_total = gold_total = 0

    for s_sys, s_gold, alignment in _paired_sentences(system, gold):
        system_total += sum(_scoreable(t, ignore_punct) for t in s_sys.tokens)
        gold_total += sum(_scoreable(t, ignore_punct) for t in s_gold.tokens)
        sys_to_gold = dict(alignment.pairs)
        for sys_id, gold_id in alignment.pairs:
            t_sys = s_sys.token(sys_id)
            t_gold = s_gold.token(gold_id)
            if not _scoreable(t_gold, ignore_punct):
                continue
            matched += 1
            if t_sys.head == 0 and t_gold.head == 0:
                heads_agree = True
            elif t_sys.head is None or t_gold.head is None:
                heads_agree = False
            else:
                heads_agree = sys_to_gold.get(t_sys.head) == t_gold.head
            if heads_agree:
                head_correct += 1
                if _norm_label(t_sys.deprel, strip_subtypes) == _norm_label(t_gold.deprel, strip_subtypes):
                    both_correct += 1

    return AttachmentScore.from_counts(matched, head_correct, both_correct, system_total, gold_total)


@dataclass(frozen=True)
class KappaResult:
    observed_agreement: float
    expected_agreement: float
    kappa: float
    item_count: int
    degenerate: bool = False

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def cohen_kappa(a: conllu.Treebank, b: conllu.Treebank,
                ignore_punct: bool = False, strip_subtypes: bool = False) -> KappaResult:
    """Chance-corrected label agreement over aligned token pairs.

    Items are aligned pairs; categories are (normalized) deprel strings.
    When both annotators use one identical label throughout, expected
    agreement hits 1 and kappa is undefined: that case is returned with
    ``degenerate=True`` and a NaN kappa.
    """
    items: list[tuple[str, str]] = []
    for s_a, s_b, alignment in _paired_sentences(a, b):
        for a_id, b_id in alignment.pairs:
            t_a, t_b = s_a.token(a_id), s_b.token(b_id)
            if not _scoreable(t_b, ignore_punct):
                continue
            items.append((
                _norm_label(t_a.deprel, strip_subtypes),
                _norm_label(t_b.deprel, strip_subtypes),
            ))

    n = len(items)
    if n == 0:
        raise MetricsError("no aligned token pairs to compute kappa over")
    p_o = sum(la == lb for la, lb in items) / n
    marg_a = Counter(la for la, _ in items)
    marg_b = Counter(lb for _, lb in items)
    p_e = sum(marg_a[label] * marg_b.get(label, 0) for label in marg_a) / (n * n)

    if math.isclose(p_e, 1.0):
        return KappaResult(p_o, p_e, math.nan, n, degenerate=True)
    return KappaResult(p_o, p_e, (p_o - p_e) / (1.0 - p_e), n)


@dataclass(frozen=True)
class ConfusionMatrix:
    """counts[i][j] = aligned tokens with gold label labels[i], system label labels[j]."""

    labels: tuple[str, ...]
    counts: tuple[tuple[int, ...], ...]

    OTHER = "OTHER"

    def cell(self, gold_label: str, system_label: str) -> int:
        return self.counts[self.labels.index(gold_label)][self.labels.index(system_label)]

    def total(self) -> int:
        return sum(map(sum, self.counts))

    def diagonal(self) -> int:
        return sum(self.counts[i][i] for i in range(len(self.labels)))

    def transposed(self) -> "ConfusionMatrix":
        n = len(self.labels)
        return ConfusionMatrix(self.labels, tuple(
            tuple(self.counts[j][i] for j in range(n)) for i in range(n)
        ))

    def to_csv(self) -> str:
        """Header row = system labels, first column = gold labels."""
        def esc(s: str) -> str:
            return '"' + s.replace('"', '""') + '"' if ("," in s or '"' in s) else s

        lines = ["gold\\system," + ",".join(esc(l) for l in self.labels)]
        for label, row in zip(self.labels, self.counts):
            lines.append(esc(label) + "," + ",".join(str(c) for c in row))
        return "\n".join(lines) + "\n"

    def as_dict(self) -> dict:
        return {"labels": list(self.labels), "counts": [list(r) for r in self.counts]}


def confusion_matrix(system: conllu.Treebank, gold: conllu.Treebank, top_k: int | None = None,
                     ignore_punct: bool = False, strip_subtypes: bool = False) -> ConfusionMatrix:
    """Count (gold deprel, system deprel) pairs over all aligned tokens.

    Head correctness is irrelevant here. With ``top_k``, labels outside the k
    most frequent gold labels collapse into an OTHER row/column.
    """
    pair_counts: Counter[tuple[str, str]] = Counter()
    gold_freq: Counter[str] = Counter()
    for s_sys, s_gold, alignment in _paired_sentences(system, gold):
        for sys_id, gold_id in alignment.pairs:
            t_sys, t_gold = s_sys.token(sys_id), s_gold.token(gold_id)
            if not _scoreable(t_gold, ignore_punct):
                continue
            g = _norm_label(t_gold.deprel, strip_subtypes)
            p = _norm_label(t_sys.deprel, strip_subtypes)
            pair_counts[(g, p)] += 1
            gold_freq[g] += 1

    labels = sorted({g for g, _ in pair_counts} | {p for _, p in pair_counts})
    if top_k is not None and top_k < len(gold_freq):
        # Keep the k most frequent gold labels (count desc, then name).
        kept = set(sorted(gold_freq, key=lambda l: (-gold_freq[l], l))[:top_k])
        bucketed: Counter[tuple[str, str]] = Counter()
        for (g, p), c in pair_counts.items():
            g2 = g if g in kept else ConfusionMatrix.OTHER
            p2 = p if p in kept else ConfusionMatrix.OTHER
            bucketed[(g2, p2)] += c
        pair_counts = bucketed
        labels = sorted(kept) + [ConfusionMatrix.OTHER]

    index = {label: i for i, label in enumerate(labels)}
    grid = [[0] * len(labels) for _ in labels]
    for (g, p), c in pair_counts.items():
        grid[index[g]][index[p]] += c
    return ConfusionMatrix(tuple(labels), tuple(tuple(row) for row in grid))


def format_attachment_report(score: AttachmentScore, ignore_punct: bool, strip_subtypes: bool) -> str:
    lines = [
        f"tokens   system={score.system_total} gold={score.gold_total} aligned={score.matched}",
        f"UAS      P={score.uas_p:.4f} R={score.uas_r:.4f} F1={score.uas_f1:.4f}",
        f"LAS      P={score.las_p:.4f} R={score.las_r:.4f} F1={score.las_f1:.4f}",
        f"flags    ignore_punct={ignore_punct} strip_subtypes={strip_subtypes}",
    ]
    return "\n".join(lines)
