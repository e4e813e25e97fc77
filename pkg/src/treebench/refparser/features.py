"""Hashed feature templates for edge-factored scoring.

Every feature is a string hashed into a fixed 2^22 id space with crc32;
collisions are accepted. Templates combine head/dependent FORM, LEMMA and
UPOS with an arc distance bucket and direction; a second template family
conjoins the same signals with the candidate deprel. Lexical templates for
unseen words simply score zero, which leaves the tag/distance templates as
the back-off.
"""

from __future__ import annotations

from dataclasses import dataclass
from zlib import crc32

from .. import conllu

TEMPLATE_VERSION = "edge-crc32-v1"
HASH_BITS = 22
HASH_MASK = (1 << HASH_BITS) - 1

_ROOT_FORM = "<root>"
_ROOT_LEMMA = "<root>"
_ROOT_UPOS = "<ROOT>"


def _fid(s: str) -> int:
    return crc32(s.encode("utf-8")) & HASH_MASK


def _distance_bucket(head: int, dep: int) -> str:
    d = abs(head - dep)
    if d <= 3:
        return str(d)
    if d <= 6:
        return "4-6"
    if d <= 10:
        return "7-10"
    return ">10"


@dataclass(frozen=True)
class _TokenView:
    form: str
    lemma: str
    upos: str


def sentence_views(s: conllu.Sentence) -> list[_TokenView]:
    """Position 0 is the artificial root."""
    views = [_TokenView(_ROOT_FORM, _ROOT_LEMMA, _ROOT_UPOS)]
    views.extend(_TokenView(t.form, t.lemma, t.upos) for t in s.tokens)
    return views


def arc_feature_ids(views: list[_TokenView], head: int, dep: int) -> list[int]:
    h, d = views[head], views[dep]
    direction = "R" if head < dep else "L"
    dist = _distance_bucket(head, dep)
    dd = direction + dist
    return [
        _fid("b|" + dd),
        _fid("hU|" + h.upos + "|" + dd),
        _fid("dU|" + d.upos + "|" + dd),
        _fid("hU,dU|" + h.upos + "," + d.upos + "|" + dd),
        _fid("hU,dU.nd|" + h.upos + "," + d.upos),
        _fid("hF|" + h.form + "|" + direction),
        _fid("dF|" + d.form + "|" + direction),
        _fid("hL,dU|" + h.lemma + "," + d.upos + "|" + direction),
        _fid("hU,dL|" + h.upos + "," + d.lemma + "|" + direction),
        _fid("hL,dL|" + h.lemma + "," + d.lemma + "|" + direction),
        _fid("hF,dU|" + h.form + "," + d.upos),
        _fid("hU,dF|" + h.upos + "," + d.form),
        _fid("hL.dd|" + h.lemma + "|" + dd),
        _fid("dL.dd|" + d.lemma + "|" + dd),
        _fid("hF,dF|" + h.form + "," + d.form + "|" + dd),
    ]


def label_feature_ids(views: list[_TokenView], head: int, dep: int, label: str) -> list[int]:
    h, d = views[head], views[dep]
    direction = "R" if head < dep else "L"
    dist = _distance_bucket(head, dep)
    return [
        _fid("l|" + label),
        _fid("l,dir|" + label + "|" + direction + dist),
        _fid("l,hU|" + label + "|" + h.upos),
        _fid("l,dU|" + label + "|" + d.upos),
        _fid("l,hU,dU|" + label + "|" + h.upos + "," + d.upos + "|" + direction),
        _fid("l,dL|" + label + "|" + d.lemma),
        _fid("l,hL|" + label + "|" + h.lemma),
        _fid("l,dF|" + label + "|" + d.form + "|" + direction),
    ]


@dataclass(frozen=True)
class FeatureVector:
    """Feature ids of one (sentence, head, dependent, label) decision.

    Ids may repeat; multiplicity is the feature count.
    """

    indices: tuple[int, ...]

    @classmethod
    def extract(cls, s: conllu.Sentence, head: int, dep: int, label: str) -> "FeatureVector":
        views = sentence_views(s)
        ids = arc_feature_ids(views, head, dep) + label_feature_ids(views, head, dep, label)
        return cls(tuple(ids))

    def dot(self, weights: dict[int, float]) -> float:
        get = weights.get
        return sum(get(i, 0.0) for i in self.indices)
