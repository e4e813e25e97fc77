"""CoNLL-U data model: parse, validate, serialize, and align treebank data.

Tokens carry the usual 10 columns. Sentence-level metadata keeps a second
writing system alongside the primary one: a ``# text_orig = ...`` comment for
the whole sentence and a per-token MISC key (``Orig`` by default) for word
forms, so dual-script treebanks survive a round trip untouched.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, replace
from typing import Iterable, Iterator, TextIO

# Column indices of a CoNLL-U word line.
ID, FORM, LEMMA, UPOS, XPOS, FEATS, HEAD, DEPREL, DEPS, MISC = range(10)
N_COLUMNS = 10

# The 17 universal POS tags.
UPOS_TAGS = frozenset({
    "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM",
    "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X",
})

DEFAULT_ORIG_KEY = "Orig"


class ConlluError(Exception):
    """Base class for CoNLL-U reading errors."""


class ParseError(ConlluError):
    """A line that cannot be read at all (bad field count, non-integer id)."""

    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class StructuralError(ConlluError):
    """A sentence whose token lines parse but do not form a valid tree."""

    def __init__(self, sent_id: str, violations: list[str]):
        detail = "; ".join(violations)
        label = sent_id or "<no sent_id>"
        super().__init__(f"sentence {label}: {detail}")
        self.sent_id = sent_id
        self.violations = violations


@dataclass(frozen=True)
class Token:
    """One word line. ``head`` is ``None`` when the column holds ``_``."""

    id: int
    form: str
    lemma: str = "_"
    upos: str = "_"
    xpos: str = "_"
    feats: tuple[str, ...] = ()      # raw "Key=Value" items, order preserved
    head: int | None = None
    deprel: str = "_"
    deps: str = "_"                  # enhanced graph, carried opaquely
    misc: tuple[str, ...] = ()       # raw "Key=Value" items, order preserved

    def misc_value(self, key: str) -> str | None:
        prefix = key + "="
        for item in self.misc:
            if item.startswith(prefix):
                return item[len(prefix):]
        return None


@dataclass(frozen=True)
class MultiwordRange:
    """A surface token covering word ids start..end (a CoNLL-U ``a-b`` line)."""

    start: int
    end: int
    form: str
    misc: tuple[str, ...] = ()


@dataclass(frozen=True)
class Sentence:
    sent_id: str = ""
    text: str = ""
    text_orig: str | None = None
    comments: tuple[str, ...] = ()   # remaining "#" lines, original order
    tokens: tuple[Token, ...] = ()
    mwts: tuple[MultiwordRange, ...] = ()
    # Empty-node lines ("a.b" ids), kept verbatim and anchored after token a.
    empty_nodes: tuple[tuple[int, str], ...] = ()

    def token(self, token_id: int) -> Token:
        if not 1 <= token_id <= len(self.tokens):
            raise KeyError(f"no token {token_id} in sentence {self.sent_id!r}")
        return self.tokens[token_id - 1]

    def is_unannotated(self) -> bool:
        return all(t.head is None for t in self.tokens)


@dataclass(frozen=True)
class Treebank:
    sentences: tuple[Sentence, ...] = ()

    def __len__(self) -> int:
        return len(self.sentences)

    def __iter__(self) -> Iterator[Sentence]:
        return iter(self.sentences)

    def sentence(self, sent_id: str) -> Sentence:
        for s in self.sentences:
            if s.sent_id == sent_id:
                return s
        raise KeyError(f"no sentence {sent_id!r} in treebank")


def split_kv(column: str) -> tuple[str, ...]:
    return () if column == "_" else tuple(column.split("|"))


def join_kv(items: tuple[str, ...]) -> str:
    return "|".join(items) if items else "_"


# ---------------------------------------------------------------------------
# Validation

# Violations of these rules make strict parse() raise StructuralError; the
# remaining rules are only reported by validate().
_TREE_RULES = frozenset({
    "missing-head", "head-range", "self-loop", "no-root", "multiple-roots",
    "cycle", "root-deprel", "id-gap",
})


def _violations(s: Sentence) -> list[tuple[str, str]]:
    out: list[tuple[str, str]] = []
    n = len(s.tokens)

    for expected, t in enumerate(s.tokens, start=1):
        if t.id != expected:
            out.append(("id-gap", f"token ids not contiguous: expected {expected}, found {t.id}"))
            return out  # later checks assume positional ids

    for t in s.tokens:
        if not t.form or "\t" in t.form or "\n" in t.form:
            out.append(("bad-form", f"token {t.id}: FORM is empty or contains tab/newline"))
        if t.upos != "_" and t.upos not in UPOS_TAGS:
            out.append(("bad-upos", f"token {t.id}: UPOS {t.upos!r} not in the universal inventory"))

    for mwt in s.mwts:
        if not (1 <= mwt.start < mwt.end <= n):
            out.append(("bad-mwt", f"multiword {mwt.start}-{mwt.end}: range outside token ids 1..{n}"))

    if s.is_unannotated() and all(t.deprel == "_" for t in s.tokens):
        return out  # unannotated sentence: no tree to check

    annotated = True
    for t in s.tokens:
        if t.head is None:
            out.append(("missing-head", f"token {t.id}: missing head"))
            annotated = False
            continue
        if t.head > n:
            out.append(("head-range", f"token {t.id}: head {t.head} does not exist"))
            annotated = False
        if t.head == t.id:
            out.append(("self-loop", f"token {t.id}: self-loop"))
        if t.deprel == "_":
            out.append(("missing-deprel", f"token {t.id}: missing deprel"))
        elif t.deprel == "root" and t.head != 0:
            out.append(("root-deprel", f"token {t.id}: deprel 'root' requires head 0"))
        elif t.head == 0 and t.deprel != "root":
            out.append(("root-deprel", f"token {t.id}: head 0 requires deprel 'root'"))

    if not annotated:
        return out

    roots = [t.id for t in s.tokens if t.head == 0]
    if not roots:
        out.append(("no-root", "no root"))
    elif len(roots) > 1:
        out.append(("multiple-roots", "multiple roots: tokens " + ",".join(map(str, roots))))

    # Any token not reachable from node 0 by following heads upward sits on a
    # cycle (heads exist and self-loops are cycles of length one).
    state = [0] * (n + 1)  # 0 unvisited, 1 on stack, 2 done
    state[0] = 2
    reported: set[int] = set()
    for start in range(1, n + 1):
        if state[start] != 0:
            continue
        path = []
        node = start
        while state[node] == 0:
            state[node] = 1
            path.append(node)
            nxt = s.tokens[node - 1].head
            if nxt is None or nxt > n:
                break
            node = nxt
        else:
            if state[node] == 1 and node not in reported:
                cycle = path[path.index(node):]
                reported.update(cycle)
                out.append(("cycle", "cycle: " + ",".join(map(str, sorted(cycle)))))
        for v in path:
            state[v] = 2
    return out


def validate(s: Sentence) -> list[str]:
    """Return human-readable invariant violations; [] means the sentence is valid."""
    return [msg for _, msg in _violations(s)]


def tree_violations(s: Sentence) -> list[str]:
    return [msg for rule, msg in _violations(s) if rule in _TREE_RULES]


def validate_treebank(tb: Treebank) -> list[str]:
    out = []
    seen: dict[str, int] = {}
    for i, s in enumerate(tb.sentences):
        label = s.sent_id or f"#{i + 1}"
        for msg in validate(s):
            out.append(f"sentence {label}: {msg}")
        if s.sent_id:  # absent sent_ids do not participate in uniqueness
            if s.sent_id in seen:
                out.append(f"sentence {label}: duplicate sent_id (also sentence #{seen[s.sent_id] + 1})")
            else:
                seen[s.sent_id] = i
    return out


# ---------------------------------------------------------------------------
# Parsing

def _parse_int(value: str, what: str, line_no: int) -> int:
    try:
        n = int(value)
    except ValueError:
        raise ParseError(f"non-integer {what}: {value!r}", line_no) from None
    return n


def _finish_sentence(
    comments: list[tuple[str, str | None]],
    tokens: list[Token],
    mwts: list[MultiwordRange],
    empties: list[tuple[int, str]],
) -> Sentence:
    sent_id = ""
    text = ""
    text_orig: str | None = None
    other: list[str] = []
    for raw, value in comments:
        key = raw[1:].split("=", 1)[0].strip() if value is not None else ""
        if key == "sent_id" and not sent_id:
            sent_id = value
        elif key == "text_orig" and text_orig is None:
            text_orig = value
        elif key == "text" and not text:
            text = value
        else:
            other.append(raw)
    return Sentence(
        sent_id=sent_id,
        text=text,
        text_orig=text_orig,
        comments=tuple(other),
        tokens=tuple(tokens),
        mwts=tuple(mwts),
        empty_nodes=tuple(empties),
    )


def parse(source: str | TextIO | Iterable[str], strict: bool = True) -> Treebank:
    """Parse CoNLL-U text into a Treebank.

    Strict mode raises StructuralError on the first sentence whose heads do
    not form a single rooted tree; lenient mode (``strict=False``) keeps such
    sentences so in-progress corrections can be loaded, leaving violations to
    ``validate``. Line-level problems are ParseErrors in both modes.
    """
    lines = source.splitlines() if isinstance(source, str) else source

    sentences: list[Sentence] = []
    comments: list[tuple[str, str | None]] = []
    tokens: list[Token] = []
    mwts: list[MultiwordRange] = []
    empties: list[tuple[int, str]] = []
    seen_ids: dict[str, int] = {}
    line_no = 0

    def flush() -> None:
        if not comments and not tokens:
            return
        s = _finish_sentence(comments, tokens, mwts, empties)
        if not s.tokens:
            raise ParseError("sentence has comments but no token lines", line_no)
        if strict:
            bad = tree_violations(s)
            if bad:
                raise StructuralError(s.sent_id, bad)
            if s.sent_id and s.sent_id in seen_ids:
                raise StructuralError(s.sent_id, ["duplicate sent_id"])
        if s.sent_id:
            seen_ids.setdefault(s.sent_id, len(sentences))
        sentences.append(s)
        comments.clear()
        tokens.clear()
        mwts.clear()
        empties.clear()

    for line_no, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            flush()
            continue
        if line.startswith("#"):
            if tokens:
                raise ParseError("comment after token lines within a sentence", line_no)
            value = line.split("=", 1)[1].strip() if "=" in line else None
            comments.append((line, value))
            continue

        cols = line.split("\t")
        if len(cols) != N_COLUMNS:
            raise ParseError(f"expected {N_COLUMNS} tab-separated fields, got {len(cols)}", line_no)
        tid = cols[ID]

        if "-" in tid:
            start_s, _, end_s = tid.partition("-")
            start = _parse_int(start_s, "multiword start", line_no)
            end = _parse_int(end_s, "multiword end", line_no)
            if start >= end:
                raise ParseError(f"multiword range {tid} is not increasing", line_no)
            mwts.append(MultiwordRange(start, end, cols[FORM], split_kv(cols[MISC])))
            continue
        if "." in tid:
            anchor = _parse_int(tid.split(".", 1)[0], "empty-node anchor", line_no)
            empties.append((anchor, line))
            continue

        idx = _parse_int(tid, "id", line_no)
        if idx != len(tokens) + 1:
            raise ParseError(f"token id {idx} out of sequence (expected {len(tokens) + 1})", line_no)
        if not cols[FORM]:
            raise ParseError("empty FORM", line_no)
        head = None if cols[HEAD] == "_" else _parse_int(cols[HEAD], "head", line_no)
        if head is not None and head < 0:
            raise ParseError(f"negative head {head}", line_no)
        tokens.append(Token(
            id=idx,
            form=cols[FORM],
            lemma=cols[LEMMA],
            upos=cols[UPOS],
            xpos=cols[XPOS],
            feats=split_kv(cols[FEATS]),
            head=head,
            deprel=cols[DEPREL],
            deps=cols[DEPS],
            misc=split_kv(cols[MISC]),
        ))

    flush()
    return Treebank(tuple(sentences))


def parse_file(path, strict: bool = True) -> Treebank:
    with open(path, encoding="utf-8") as f:
        return parse(f, strict=strict)


# ---------------------------------------------------------------------------
# Serialization

def _token_line(t: Token) -> str:
    head = "_" if t.head is None else str(t.head)
    return "\t".join((
        str(t.id), t.form, t.lemma, t.upos, t.xpos, join_kv(t.feats),
        head, t.deprel, t.deps, join_kv(t.misc),
    ))


def _mwt_line(m: MultiwordRange) -> str:
    return "\t".join((f"{m.start}-{m.end}", m.form, "_", "_", "_", "_", "_", "_", "_", join_kv(m.misc)))


def serialize_sentence(s: Sentence) -> str:
    lines: list[str] = []
    if s.sent_id:
        lines.append(f"# sent_id = {s.sent_id}")
    if s.text:
        lines.append(f"# text = {s.text}")
    if s.text_orig is not None:
        lines.append(f"# text_orig = {s.text_orig}")
    lines.extend(s.comments)

    mwt_at = {m.start: m for m in s.mwts}
    empties_at: dict[int, list[str]] = {}
    for anchor, raw in s.empty_nodes:
        empties_at.setdefault(anchor, []).append(raw)

    lines.extend(empties_at.get(0, ()))
    for t in s.tokens:
        if t.id in mwt_at:
            lines.append(_mwt_line(mwt_at[t.id]))
        lines.append(_token_line(t))
        lines.extend(empties_at.get(t.id, ()))
    return "\n".join(lines) + "\n"


def serialize(tb: Treebank) -> str:
    """Canonical form: fixed comment order, one blank line after every sentence."""
    return "".join(serialize_sentence(s) + "\n" for s in tb.sentences)


def write_file(tb: Treebank, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(serialize(tb))


# ---------------------------------------------------------------------------
# Token alignment (CoNLL-2018 shared task style)

@dataclass(frozen=True)
class TokenAlignment:
    """One-to-one matching between system and gold token ids of one sentence."""

    pairs: tuple[tuple[int, int], ...]
    system_only: int
    gold_only: int


def _align_key(form: str) -> str:
    # Spaces (category Zs) do not count as characters when comparing spans.
    return "".join(c for c in form if unicodedata.category(c) != "Zs")


def _char_spans(tokens: tuple[Token, ...]) -> tuple[str, list[tuple[int, int]]]:
    chars: list[str] = []
    spans: list[tuple[int, int]] = []
    for t in tokens:
        key = _align_key(t.form)
        spans.append((len(chars), len(chars) + len(key)))
        chars.extend(key)
    return "".join(chars), spans


def _lcs_pairs(a: str, b: str) -> list[tuple[int, int]]:
    """Matched index pairs of one longest common subsequence of a and b."""
    la, lb = len(a), len(b)
    dp = [[0] * (lb + 1) for _ in range(la + 1)]
    for i in range(1, la + 1):
        ai = a[i - 1]
        row, prev = dp[i], dp[i - 1]
        for j in range(1, lb + 1):
            if ai == b[j - 1]:
                row[j] = prev[j - 1] + 1
            else:
                row[j] = prev[j] if prev[j] >= row[j - 1] else row[j - 1]
    pairs: list[tuple[int, int]] = []
    i, j = la, lb
    while i > 0 and j > 0:
        if a[i - 1] == b[j - 1] and dp[i][j] == dp[i - 1][j - 1] + 1:
            pairs.append((i - 1, j - 1))
            i -= 1
            j -= 1
        elif dp[i - 1][j] >= dp[i][j - 1]:
            i -= 1
        else:
            j -= 1
    pairs.reverse()
    return pairs


def align(system: Sentence, gold: Sentence) -> TokenAlignment:
    """Match tokens whose character spans coincide exactly.

    Identical FORM streams match by span identity; otherwise an LCS over the
    concatenated character streams decides which spans coincide.
    """
    sys_chars, sys_spans = _char_spans(system.tokens)
    gold_chars, gold_spans = _char_spans(gold.tokens)
    pairs: list[tuple[int, int]] = []

    if sys_chars == gold_chars:
        gold_by_span = {span: gi for gi, span in enumerate(gold_spans)}
        for si, span in enumerate(sys_spans):
            gi = gold_by_span.get(span)
            if gi is not None:
                pairs.append((si + 1, gi + 1))
    else:
        matched = _lcs_pairs(sys_chars, gold_chars)
        to_gold = dict(matched)
        gold_span_at = {span[0]: (gi, span[1]) for gi, span in enumerate(gold_spans)}
        for si, (start, end) in enumerate(sys_spans):
            if end == start:
                continue
            g_start = to_gold.get(start)
            if g_start is None or g_start not in gold_span_at:
                continue
            gi, g_end = gold_span_at[g_start]
            if g_end - g_start != end - start:
                continue
            # Spans coincide only if every character pairs up contiguously.
            if all(to_gold.get(start + k) == g_start + k for k in range(1, end - start)):
                pairs.append((si + 1, gi + 1))

    return TokenAlignment(
        pairs=tuple(pairs),
        system_only=len(system.tokens) - len(pairs),
        gold_only=len(gold.tokens) - len(pairs),
    )


# ---------------------------------------------------------------------------
# Small conveniences used across the workbench

def with_token(s: Sentence, token_id: int, **changes) -> Sentence:
    """Return a copy of s with one token's fields replaced."""
    t = s.token(token_id)
    new_tokens = list(s.tokens)
    new_tokens[token_id - 1] = replace(t, **changes)
    return replace(s, tokens=tuple(new_tokens))


def word_count(s: Sentence) -> int:
    return len(s.tokens)
