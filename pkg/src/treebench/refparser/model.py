"""Averaged structured perceptron over edge-factored features.

Training decodes each sentence with the current raw weights and, on a
mistake, adds the gold arc features and subtracts the predicted ones (labels
included). Predictions always use the running average of the weight
trajectory, which is what makes the perceptron stable enough to warm-start
from an earlier model: fine-tuning continues from the base raw weights and
averages over the new run only.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field, replace
from pathlib import Path

from .. import conllu
from .decoder import EdgeScoreTable, decode
from .features import TEMPLATE_VERSION, arc_feature_ids, label_feature_ids, sentence_views

MODEL_FILENAME = "model.json"
ROOT_DEPREL = "root"


class ParserError(Exception):
    pass


class UntrainedModelError(ParserError):
    pass


class TemplateVersionError(ParserError):
    pass


@dataclass
class ParserModel:
    weights: dict[int, float] = field(default_factory=dict)
    averaged_weights: dict[int, float] = field(default_factory=dict)
    label_set: tuple[str, ...] = ()
    template_version: str = TEMPLATE_VERSION
    updates_seen: int = 0

    @property
    def trained(self) -> bool:
        return bool(self.label_set)

    def require_trained(self) -> None:
        if not self.trained:
            raise UntrainedModelError("model has not been trained")


def _sentence_feature_ids(s: conllu.Sentence, labels: tuple[str, ...]):
    """Cache of arc and label feature ids for every candidate arc of s."""
    views = sentence_views(s)
    n = len(s.tokens)
    arcs: dict[tuple[int, int], list[int]] = {}
    lab: dict[tuple[int, int], list[list[int]]] = {}
    for h in range(n + 1):
        for d in range(1, n + 1):
            if h == d:
                continue
            arcs[(h, d)] = arc_feature_ids(views, h, d)
            lab[(h, d)] = [label_feature_ids(views, h, d, l) for l in labels]
    return arcs, lab


def _score_table(weights: dict[int, float], n: int, labels: tuple[str, ...],
                 arcs, lab) -> EdgeScoreTable:
    get = weights.get
    scores: list[list[list[float] | None]] = [[None] * (n + 1) for _ in range(n + 1)]
    for (h, d), arc_ids in arcs.items():
        base = 0.0
        for i in arc_ids:
            base += get(i, 0.0)
        cell = []
        for ids in lab[(h, d)]:
            w = base
            for i in ids:
                w += get(i, 0.0)
            cell.append(w)
        scores[h][d] = cell
    return EdgeScoreTable(n, labels, scores)


def score_edges(model: ParserModel, s: conllu.Sentence) -> EdgeScoreTable:
    """Deterministic (head, dependent, label) scores from the averaged weights."""
    model.require_trained()
    arcs, lab = _sentence_feature_ids(s, model.label_set)
    return _score_table(model.averaged_weights, len(s.tokens), model.label_set, arcs, lab)


def train(corpus: conllu.Treebank, epochs: int = 10, seed: int = 1,
          base: ParserModel | None = None) -> ParserModel:
    """Train (or warm-start fine-tune, when ``base`` is given) on gold trees."""
    if len(corpus.sentences) == 0:
        raise ParserError("cannot train on an empty corpus")
    if epochs < 1:
        raise ParserError("epochs must be >= 1")
    for s in corpus.sentences:
        bad = conllu.validate(s)
        if bad or s.is_unannotated():
            label = s.sent_id or "<no sent_id>"
            raise ParserError(f"training sentence {label} is not a valid gold tree: {bad or 'unannotated'}")
    if base is not None and base.template_version != TEMPLATE_VERSION:
        raise TemplateVersionError(
            f"base model templates {base.template_version!r} != {TEMPLATE_VERSION!r}")

    labels = list(base.label_set) if base is not None else []
    seen = set(labels)
    new = {t.deprel for s in corpus.sentences for t in s.tokens} - seen
    labels.extend(sorted(new))
    label_set = tuple(labels)
    label_index = {l: i for i, l in enumerate(label_set)}

    weights: dict[int, float] = dict(base.weights) if base is not None else {}
    totals: dict[int, float] = {}
    stamps: dict[int, int] = {}
    updates = base.updates_seen if base is not None else 0

    cached = [
        (s, [(t.head, label_index[t.deprel]) for t in s.tokens],
         *_sentence_feature_ids(s, label_set))
        for s in corpus.sentences
    ]

    rng = random.Random(seed)
    order = list(range(len(cached)))
    t = 0
    for _ in range(epochs):
        rng.shuffle(order)
        for si in order:
            t += 1
            s, gold, arcs, lab = cached[si]
            n = len(s.tokens)
            table = _score_table(weights, n, label_set, arcs, lab)
            heads, deprels = decode(table, root_label=ROOT_DEPREL)
            pred = [(h, label_index[l]) for h, l in zip(heads, deprels)]
            if pred == gold:
                continue
            updates += 1
            delta: dict[int, int] = {}
            for d in range(1, n + 1):
                g, p = gold[d - 1], pred[d - 1]
                if g == p:
                    continue
                for i in arcs[(g[0], d)]:
                    delta[i] = delta.get(i, 0) + 1
                for i in lab[(g[0], d)][g[1]]:
                    delta[i] = delta.get(i, 0) + 1
                for i in arcs[(p[0], d)]:
                    delta[i] = delta.get(i, 0) - 1
                for i in lab[(p[0], d)][p[1]]:
                    delta[i] = delta.get(i, 0) - 1
            for i, dv in delta.items():
                if dv == 0:
                    continue
                w = weights.get(i, 0.0)
                totals[i] = totals.get(i, 0.0) + w * (t - stamps.get(i, 0))
                stamps[i] = t
                weights[i] = w + dv

    averaged: dict[int, float] = {}
    for i, w in weights.items():
        acc = totals.get(i, 0.0) + w * (t - stamps.get(i, 0))
        avg = acc / t
        if avg != 0.0:
            averaged[i] = avg
    weights = {i: w for i, w in weights.items() if w != 0.0}

    return ParserModel(
        weights=weights,
        averaged_weights=averaged,
        label_set=label_set,
        template_version=TEMPLATE_VERSION,
        updates_seen=updates,
    )


def predict(model: ParserModel, tb: conllu.Treebank) -> conllu.Treebank:
    """Re-annotate HEAD and DEPREL; every other column is left untouched."""
    model.require_trained()
    out = []
    for s in tb.sentences:
        if not s.tokens:
            out.append(s)
            continue
        table = score_edges(model, s)
        heads, deprels = decode(table, root_label=ROOT_DEPREL)
        new_tokens = []
        for t, h, l in zip(s.tokens, heads, deprels):
            new_tokens.append(replace(t, head=h, deprel=l))
        out.append(replace(s, tokens=tuple(new_tokens)))
    return conllu.Treebank(tuple(out))


# ---------------------------------------------------------------------------
# Persistence: one JSON document, refuses foreign feature templates.

_FORMAT = "treebench-parser-model"
_FORMAT_VERSION = 1


def save(model: ParserModel, path) -> Path:
    """Write the model; ``path`` may be a directory (uses model.json inside)."""
    p = Path(path)
    if p.is_dir() or not p.suffix:
        p.mkdir(parents=True, exist_ok=True)
        p = p / MODEL_FILENAME
    doc = {
        "format": _FORMAT,
        "format_version": _FORMAT_VERSION,
        "template_version": model.template_version,
        "label_set": list(model.label_set),
        "updates_seen": model.updates_seen,
        "weights": {str(i): w for i, w in sorted(model.weights.items())},
        "averaged_weights": {str(i): w for i, w in sorted(model.averaged_weights.items())},
    }
    tmp = p.with_name(p.name + ".tmp")
    tmp.write_text(json.dumps(doc, ensure_ascii=False, sort_keys=True), encoding="utf-8")
    tmp.replace(p)
    return p


def load(path) -> ParserModel:
    p = Path(path)
    if p.is_dir():
        p = p / MODEL_FILENAME
    doc = json.loads(p.read_text(encoding="utf-8"))
    if doc.get("format") != _FORMAT:
        raise ParserError(f"{p} is not a parser model file")
    if doc.get("template_version") != TEMPLATE_VERSION:
        raise TemplateVersionError(
            f"model templates {doc.get('template_version')!r} do not match this build ({TEMPLATE_VERSION!r})")
    return ParserModel(
        weights={int(i): w for i, w in doc["weights"].items()},
        averaged_weights={int(i): w for i, w in doc["averaged_weights"].items()},
        label_set=tuple(doc["label_set"]),
        template_version=doc["template_version"],
        updates_seen=int(doc["updates_seen"]),
    )
