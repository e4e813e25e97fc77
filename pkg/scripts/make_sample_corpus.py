#!/usr/bin/env python3
"""Generate the bundled UD-format sample treebank (tests/data/ud_sample.conllu).

The corpus is synthetic: a seeded grammar over a Turkish-flavored vocabulary
with SOV order plus scrambling, possessor chains, converb clauses and
postpositions. Every sentence carries a second-script rendering (# text_orig
and a per-token MISC Orig key) so the dual-script plumbing gets exercised end
to end.

Attachment decisions that matter are tied to individual vocabulary items
(each place noun prefers the main or the subordinate verb, each possessor
and each adjective attaches short or long), so a parser has to observe an
item a few times before it gets those arcs right. That is what gives the
corpus a visible learning curve in the few-hundred-sentence regime.

Usage: make_sample_corpus.py [--seed 20260501] [--size 300] [--out PATH]
"""

from __future__ import annotations

import argparse
import random
import sys
from dataclasses import dataclass, field
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from treebench import conllu

# Fake Perso-Arabic rendering: consonant-oriented character map, applied per
# form. Purely cosmetic second-script data, not a real transliteration.
_ORIG_MAP = {
    "a": "ا", "b": "ب", "c": "ج", "ç": "چ", "d": "د", "e": "ه", "f": "ف",
    "g": "گ", "ğ": "غ", "h": "ح", "ı": "ى", "i": "ي", "j": "ژ", "k": "ك",
    "l": "ل", "m": "م", "n": "ن", "o": "و", "ö": "و", "p": "پ", "r": "ر",
    "s": "س", "ş": "ش", "t": "ت", "u": "و", "ü": "و", "v": "و", "y": "ي",
    "z": "ز", ".": "۔", ",": "،", "?": "؟", "!": "!",
}


def to_orig(form: str) -> str:
    return "".join(_ORIG_MAP.get(ch, ch) for ch in form.lower())


def item_flag(stem: str, salt: str) -> bool:
    """A stable per-vocabulary-item coin flip (the learnable preference)."""
    return random.Random(f"{stem}|{salt}").random() < 0.5


_CONS = list("bcçdgğhjklmnprsştvyz")
_VOW_FRONT = list("eiöü")
_VOW_BACK = list("aıou")


def _make_stem(rng: random.Random, syllables: int) -> str:
    back = rng.random() < 0.5
    vowels = _VOW_BACK if back else _VOW_FRONT
    out = []
    for i in range(syllables):
        if i > 0 or rng.random() < 0.8:
            out.append(rng.choice(_CONS))
        out.append(rng.choice(vowels))
        if rng.random() < 0.4:
            out.append(rng.choice(_CONS))
    return "".join(out)


def _back(stem: str) -> bool:
    for ch in reversed(stem):
        if ch in _VOW_BACK:
            return True
        if ch in _VOW_FRONT:
            return False
    return True


def _case(stem: str, case: str) -> str:
    back = _back(stem)
    suffix = {
        "nom": "",
        "acc": "ı" if back else "i",
        "dat": "a" if back else "e",
        "loc": "da" if back else "de",
        "gen": "ın" if back else "in",
    }[case]
    if suffix and stem[-1] in "aeıioöuü" and suffix[0] in "aeıi":
        suffix = "y" + suffix
    return stem + suffix


class Vocabulary:
    def __init__(self, rng: random.Random):
        uniq: set[str] = set()

        def stems(count, syllables=2):
            out = []
            while len(out) < count:
                s = _make_stem(rng, syllables)
                if len(s) >= 2 and s not in uniq:
                    uniq.add(s)
                    out.append(s)
            return out

        self.nouns = stems(120)
        self.verbs = stems(48)
        self.trans_verbs = set(rng.sample(self.verbs, 28))
        self.adjectives = stems(36)
        self.adverbs = stems(14)
        self.propn = [s.capitalize() for s in stems(16, syllables=3)]
        self.dets = ["bu", "şu", "o", "bir", "her"]
        self.postps = ["için", "ile", "gibi", "kadar"]
        self.cconj = ["ve", "ama"]
        # Contested arcs draw from smaller sub-vocabularies so each item
        # recurs often enough for its preference to be observable.
        self.place_nouns = self.nouns[:40]
        self.poss_nouns = self.nouns[20:75]
        # Archaic-register extension used only by the later genre: loanword
        # vocabulary the early section never shows.
        self.nouns_b = stems(30, syllables=3)
        self.verbs_b = stems(10, syllables=3)
        self.adjectives_b = stems(10, syllables=3)
        # Zipf-ish sampling weights: frequent head of the list, long rare tail.
        self.noun_w = [1.0 / (i + 1) ** 0.55 for i in range(len(self.nouns))]
        self.verb_w = [1.0 / (i + 1) ** 0.55 for i in range(len(self.verbs))]
        self.adj_w = [1.0 / (i + 1) ** 0.55 for i in range(len(self.adjectives))]

    def noun(self, rng: random.Random, archaic: bool = False) -> str:
        if archaic and rng.random() < 0.35:
            return rng.choice(self.nouns_b)
        return rng.choices(self.nouns, weights=self.noun_w, k=1)[0]

    def verb(self, rng: random.Random, archaic: bool = False) -> str:
        if archaic and rng.random() < 0.3:
            return rng.choice(self.verbs_b)
        return rng.choices(self.verbs, weights=self.verb_w, k=1)[0]

    def adjective(self, rng: random.Random, archaic: bool = False) -> str:
        if archaic and rng.random() < 0.35:
            return rng.choice(self.adjectives_b)
        return rng.choices(self.adjectives, weights=self.adj_w, k=1)[0]


@dataclass
class Row:
    form: str
    lemma: str
    upos: str
    deprel: str
    feats: tuple[str, ...] = ()
    head: int | None = None  # absolute 1-based id, filled as the sentence grows


class Generator:
    """Two registers: a plain early register and an archaic late one.

    The archaic register (the pool section) mixes in loanword vocabulary and
    head-first "ezafe" phrases -- noun + following adjective or possessor --
    that never occur in the early section, so a parser trained on the early
    section is systematically wrong on them until it sees corrected data.
    """

    def __init__(self, seed: int):
        self.rng = random.Random(seed)
        self.vocab = Vocabulary(random.Random(seed + 1))
        self.archaic = False

    def _ezafe_phrase(self, rows: list[Row], deprel: str, case: str) -> int:
        rng, v = self.rng, self.vocab
        head_stem = v.noun(rng, archaic=True)
        rows.append(Row(head_stem + "-i", head_stem, "NOUN", deprel,
                        feats=(f"Case={case.capitalize()}",)))
        head_id = len(rows)
        if rng.random() < 0.5:
            adj = v.adjective(rng, archaic=True)
            rows.append(Row(adj, adj, "ADJ", "amod", head=head_id))
        else:
            dep_stem = v.noun(rng, archaic=True)
            rows.append(Row(dep_stem, dep_stem, "NOUN", "nmod:poss",
                            feats=("Case=Nom",), head=head_id))
        return head_id

    def _noun_phrase(self, rows: list[Row], deprel: str, case: str,
                     allow_chain: bool = True) -> int:
        """Append one NP; returns the absolute id of its head noun.

        Contested arcs: in a two-possessor chain the outer possessor attaches
        short (adjacent noun) or long (chain head) depending on its own stem;
        an adjective in front of a chain does the same.
        """
        rng, v = self.rng, self.vocab
        if self.archaic and rng.random() < 0.45:
            return self._ezafe_phrase(rows, deprel, case)
        start = len(rows)

        chain: list[str] = []
        if allow_chain and rng.random() < 0.5:
            chain.append(rng.choice(v.poss_nouns))
            if rng.random() < 0.5:
                chain.append(rng.choice(v.poss_nouns))

        adj = None
        if rng.random() < 0.38:
            adj = v.adjective(rng, archaic=self.archaic)
        det = rng.choice(v.dets) if not chain and adj is None and rng.random() < 0.25 else None

        if deprel == "nsubj" and not chain and rng.random() < 0.12:
            head_stem = rng.choice(v.propn)
            head_row = Row(head_stem, head_stem, "PROPN", deprel)
        else:
            head_stem = v.noun(rng)
            head_row = Row(_case(head_stem, case), head_stem, "NOUN", deprel,
                           feats=(f"Case={case.capitalize()}",))

        if det is not None:
            rows.append(Row(det, det, "DET", "det"))
        if adj is not None and (not chain or rng.random() < 0.5):
            # Adjective in front of everything; with a chain its target is its
            # own lexical choice, otherwise the plain head noun.
            rows.append(Row(adj, adj, "ADJ", "amod"))
            adj_pos = len(rows)
            adj_long = not chain or item_flag(adj, "adj-long")
            adj = (adj_pos, adj_long)
        elif adj is not None:
            rows.append(Row(adj, adj, "ADJ", "amod"))
            adj = (len(rows), True)

        chain_ids: list[int] = []
        for stem in chain:
            rows.append(Row(_case(stem, "gen"), stem, "NOUN", "nmod:poss",
                            feats=("Case=Gen",)))
            chain_ids.append(len(rows))

        rows.append(head_row)
        head_id = len(rows)

        if det is not None:
            rows[start].head = head_id
        if adj is not None:
            adj_pos, adj_long = adj
            if adj_long or not chain_ids:
                rows[adj_pos - 1].head = head_id
            else:
                rows[adj_pos - 1].head = chain_ids[0]
        if chain_ids:
            # Inner possessor always modifies the chain head; the outer one
            # attaches short or long by its own preference.
            rows[chain_ids[-1] - 1].head = head_id
            if len(chain_ids) == 2:
                outer = chain_ids[0]
                stem = rows[outer - 1].lemma
                rows[outer - 1].head = chain_ids[1] if item_flag(stem, "poss-short") else head_id
        return head_id

    def sentence(self, index: int, archaic: bool = False) -> conllu.Sentence:
        rng, v = self.rng, self.vocab
        self.archaic = archaic
        rows: list[Row] = []

        main_verb = v.verb(rng, archaic=archaic)
        two_verb = rng.random() < 0.55
        sub_ids: list[int] = []
        sub_verb_id = None

        if two_verb:
            sub_verb = v.verb(rng)
            if rng.random() < 0.6:
                sub_ids.append(self._noun_phrase(rows, "nsubj", "nom"))
            if sub_verb in v.trans_verbs and rng.random() < 0.6:
                sub_ids.append(self._noun_phrase(rows, "obj", "acc"))
            contested = None
            if rng.random() < 0.85:
                # The contested arc: a locative/dative noun right before the
                # subordinate verb that may still belong to the main verb.
                stem = rng.choice(v.place_nouns)
                case = rng.choice(["loc", "dat"])
                rows.append(Row(_case(stem, case), stem, "NOUN", "obl",
                                feats=(f"Case={case.capitalize()}",)))
                contested = (len(rows), item_flag(stem, "obl-main"))
            conv = sub_verb + ("ıp" if _back(sub_verb) else "ip")
            rows.append(Row(conv, sub_verb, "VERB", "advcl", feats=("VerbForm=Conv",)))
            sub_verb_id = len(rows)
            for i in sub_ids:
                rows[i - 1].head = sub_verb_id
            if contested is not None:
                pos, to_main = contested
                rows[pos - 1].head = None if to_main else sub_verb_id
                if to_main:
                    sub_ids = sub_ids  # main verb id assigned later
                    main_obl = pos
                else:
                    main_obl = None
            else:
                main_obl = None
        else:
            main_obl = None

        main_args: list[int] = []
        main_args.append(self._noun_phrase(rows, "nsubj", "nom"))
        if main_verb in v.trans_verbs and rng.random() < 0.8:
            main_args.append(self._noun_phrase(rows, "obj", "acc"))
        if rng.random() < 0.4:
            obl_id = self._noun_phrase(rows, "obl", rng.choice(["loc", "dat"]))
            if rng.random() < 0.3:
                pp = rng.choice(v.postps)
                rows.append(Row(pp, pp, "ADP", "case", head=obl_id))
            main_args.append(obl_id)
        if rng.random() < 0.3:
            adv = rng.choice(v.adverbs)
            rows.append(Row(adv, adv, "ADV", "advmod"))
            main_args.append(len(rows))

        if rng.random() < 0.18 and main_args:
            subj = main_args[0]
            cc = rng.choice(v.cconj)
            rows.append(Row(cc, cc, "CCONJ", "cc"))
            cc_pos = len(rows)
            conj_id = self._noun_phrase(rows, "conj", "nom", allow_chain=False)
            rows[cc_pos - 1].head = conj_id
            rows[conj_id - 1].head = subj

        rows.append(Row(main_verb + ("dı" if _back(main_verb) else "di"),
                        main_verb, "VERB", "root", feats=("Tense=Past",), head=0))
        root_id = len(rows)
        if sub_verb_id is not None:
            rows[sub_verb_id - 1].head = root_id
        if main_obl is not None:
            rows[main_obl - 1].head = root_id
        for i in main_args:
            if rows[i - 1].head is None:
                rows[i - 1].head = root_id

        if rng.random() < 0.12:
            aux = "idi" if rng.random() < 0.5 else "imiş"
            rows.append(Row(aux, "i", "AUX", "aux", head=root_id))
        punct = rng.choice([".", ".", ".", "?", "!"])
        rows.append(Row(punct, punct, "PUNCT", "punct", head=root_id))

        assert all(r.head is not None for r in rows), [r for r in rows if r.head is None]

        built = tuple(
            conllu.Token(id=i, form=r.form, lemma=r.lemma, upos=r.upos,
                         feats=r.feats, head=r.head, deprel=r.deprel,
                         misc=(f"Orig={to_orig(r.form)}",))
            for i, r in enumerate(rows, start=1)
        )
        return conllu.Sentence(
            sent_id=f"synth-{index:04d}",
            text=" ".join(t.form for t in built),
            text_orig=" ".join(to_orig(t.form) for t in built),
            comments=("# genre = " + ("archaic" if archaic else "plain"),),
            tokens=built,
        )

    def treebank(self, size: int, archaic_tail: int = 0) -> conllu.Treebank:
        """The last ``archaic_tail`` sentences use the archaic register."""
        return conllu.Treebank(tuple(
            self.sentence(i + 1, archaic=i >= size - archaic_tail)
            for i in range(size)
        ))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=20260501)
    ap.add_argument("--size", type=int, default=300)
    ap.add_argument("--archaic-tail", type=int, default=100,
                    help="how many trailing sentences use the archaic register")
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "tests/data/ud_sample.conllu"))
    args = ap.parse_args()

    tb = Generator(args.seed).treebank(args.size, archaic_tail=args.archaic_tail)
    bad = conllu.validate_treebank(tb)
    if bad:
        raise SystemExit("generated corpus does not validate: " + "; ".join(bad[:5]))
    conllu.write_file(tb, args.out)
    words = sum(len(s.tokens) for s in tb.sentences)
    print(f"wrote {len(tb.sentences)} sentences / {words} words to {args.out}")


if __name__ == "__main__":
    main()
