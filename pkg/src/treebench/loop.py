"""The iterative annotation loop with durable on-disk project state.

One project = one directory:

    project.json                      manifest (single source of truth)
    pool.conllu                       unannotated/reference sentence pool
    lock                              advisory lock for mutating operations
    batches/NNN/pseudo.conllu         parser output for the sampled batch
    batches/NNN/draft.conllu          working copy under human correction
    batches/NNN/gold.conllu           finalized gold annotation
    batches/NNN/report.json           pseudo-vs-gold scores for the batch
    batches/NNN/confusion.csv         label confusion as CSV
    batches/NNN/audit.log             one JSON record per token edit
    models/iterNNN/                   model lineage, iter000 = base model

Every step writes data files first and commits by atomically replacing the
manifest, so a crash at any point leaves either the previous state or the
fully applied step. The audit log is the source of truth for drafts: a draft
file is regenerated from pseudo + audit replay whenever they disagree.
"""

from __future__ import annotations

import fcntl
import json
import os
import random
import shutil
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import adapter, conllu, metrics, refparser

MANIFEST_NAME = "project.json"
POOL_NAME = "pool.conllu"
LOCK_NAME = "lock"

# Batch states, in order; FAILED is reachable from any of them.
SAMPLED = "SAMPLED"
PSEUDO_ANNOTATED = "PSEUDO_ANNOTATED"
IN_CORRECTION = "IN_CORRECTION"
GOLD_FINALIZED = "GOLD_FINALIZED"
FINETUNED = "FINETUNED"
FAILED = "FAILED"
_STATE_ORDER = (SAMPLED, PSEUDO_ANNOTATED, IN_CORRECTION, GOLD_FINALIZED, FINETUNED)
_IN_PROGRESS = {SAMPLED, PSEUDO_ANNOTATED, IN_CORRECTION}


class LoopError(Exception):
    pass


class ValidationFailed(LoopError):
    def __init__(self, violations: list[str]):
        super().__init__("batch has invalid sentences:\n" + "\n".join("  " + v for v in violations))
        self.violations = violations


def _failpoint(name: str) -> None:
    # Crash injection for the durability tests: die hard, no cleanup.
    if os.environ.get("TREEBENCH_FAILPOINT") == name:
        os._exit(42)


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8") as f:
        f.write(text)
        f.flush()
        os.fsync(f.fileno())
    os.replace(tmp, path)


@dataclass
class Settings:
    batch_size: int = 50
    ignore_punct: bool = False
    strip_subtypes: bool = False
    misc_orig_key: str = "Orig"
    sampling_seed: int = 0
    train_epochs: int = 8
    finetune_epochs: int = 5
    train_seed: int = 1

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class BackendSpec:
    kind: str = "builtin"  # "builtin" | "external"
    executable: str = ""
    base_args: tuple[str, ...] = ()
    timeout: float = 300.0
    env: tuple[tuple[str, str], ...] = ()

    def as_dict(self) -> dict:
        if self.kind == "builtin":
            return {"kind": "builtin"}
        return {
            "kind": "external", "executable": self.executable,
            "base_args": list(self.base_args), "timeout": self.timeout,
            "env": {k: v for k, v in self.env},
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "BackendSpec":
        if doc.get("kind", "builtin") == "builtin":
            return cls()
        return cls(
            kind="external", executable=doc["executable"],
            base_args=tuple(doc.get("base_args", ())), timeout=doc.get("timeout", 300.0),
            env=tuple(sorted(doc.get("env", {}).items())),
        )


@dataclass
class BatchReport:
    size: int
    avg_word_count: float
    edit_count: int
    attachment: metrics.AttachmentScore
    confusion: metrics.ConfusionMatrix
    ignore_punct: bool
    strip_subtypes: bool

    def as_dict(self) -> dict:
        return {
            "size": self.size,
            "avg_word_count": self.avg_word_count,
            "edit_count": self.edit_count,
            "uas": self.attachment.uas_f1,
            "las": self.attachment.las_f1,
            "attachment": self.attachment.as_dict(),
            "confusion": self.confusion.as_dict(),
            "flags": {"ignore_punct": self.ignore_punct, "strip_subtypes": self.strip_subtypes},
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "BatchReport":
        att = metrics.AttachmentScore(**doc["attachment"])
        conf = metrics.ConfusionMatrix(
            tuple(doc["confusion"]["labels"]),
            tuple(tuple(row) for row in doc["confusion"]["counts"]),
        )
        return cls(
            size=doc["size"], avg_word_count=doc["avg_word_count"],
            edit_count=doc["edit_count"], attachment=att, confusion=conf,
            ignore_punct=doc["flags"]["ignore_punct"],
            strip_subtypes=doc["flags"]["strip_subtypes"],
        )


@dataclass
class BatchRecord:
    index: int
    sentence_ids: list[str]
    state: str
    model_used: str
    model_produced: str | None = None
    report: BatchReport | None = None
    idempotency: dict[str, str] = field(default_factory=dict)

    @property
    def dir_name(self) -> str:
        return f"batches/{self.index:03d}"

    @property
    def pseudo_file(self) -> str:
        return f"{self.dir_name}/pseudo.conllu"

    @property
    def draft_file(self) -> str:
        return f"{self.dir_name}/draft.conllu"

    @property
    def gold_file(self) -> str:
        return f"{self.dir_name}/gold.conllu"

    @property
    def report_file(self) -> str:
        return f"{self.dir_name}/report.json"

    @property
    def audit_file(self) -> str:
        return f"{self.dir_name}/audit.log"

    def as_dict(self) -> dict:
        return {
            "index": self.index,
            "sentence_ids": list(self.sentence_ids),
            "state": self.state,
            "model_used": self.model_used,
            "model_produced": self.model_produced,
            "report": self.report.as_dict() if self.report else None,
            "idempotency": dict(self.idempotency),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "BatchRecord":
        return cls(
            index=doc["index"],
            sentence_ids=list(doc["sentence_ids"]),
            state=doc["state"],
            model_used=doc["model_used"],
            model_produced=doc.get("model_produced"),
            report=BatchReport.from_dict(doc["report"]) if doc.get("report") else None,
            idempotency=dict(doc.get("idempotency", {})),
        )


@dataclass
class ProjectManifest:
    name: str
    created: str
    batch_size: int
    backend: BackendSpec
    settings: Settings
    model_versions: list[str]
    batches: list[BatchRecord]

    def as_dict(self) -> dict:
        return {
            "format_version": 1,
            "name": self.name,
            "created": self.created,
            "pool_file": POOL_NAME,
            "batch_size": self.batch_size,
            "parser_backend": self.backend.as_dict(),
            "settings": self.settings.as_dict(),
            "model_versions": list(self.model_versions),
            "batches": [b.as_dict() for b in self.batches],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ProjectManifest":
        return cls(
            name=doc["name"],
            created=doc["created"],
            batch_size=doc["batch_size"],
            backend=BackendSpec.from_dict(doc["parser_backend"]),
            settings=Settings(**doc["settings"]),
            model_versions=list(doc["model_versions"]),
            batches=[BatchRecord.from_dict(b) for b in doc["batches"]],
        )


@dataclass(frozen=True)
class Edit:
    token_id: int
    head: int | None = None
    deprel: str | None = None
    upos: str | None = None


class Project:
    """All mutating operations go through one advisory file lock."""

    def __init__(self, directory, manifest: ProjectManifest):
        self.dir = Path(directory)
        self.manifest = manifest

    # -- construction / persistence -------------------------------------------

    @classmethod
    def create(cls, directory, pool: conllu.Treebank, base_model,
               settings: Settings | None = None, backend: BackendSpec | None = None,
               name: str | None = None) -> "Project":
        d = Path(directory)
        if d.exists() and any(d.iterdir()):
            raise LoopError(f"project directory {d} already exists and is not empty")
        bad = conllu.validate_treebank(pool)
        if bad:
            raise LoopError("pool does not validate:\n" + "\n".join("  " + v for v in bad))
        if len(pool.sentences) == 0:
            raise LoopError("pool is empty")
        missing = [i + 1 for i, s in enumerate(pool.sentences) if not s.sent_id]
        if missing:
            raise LoopError(f"pool sentences without sent_id (needed for batch bookkeeping): {missing[:5]}")

        settings = settings or Settings()
        backend = backend or BackendSpec()
        d.mkdir(parents=True, exist_ok=True)
        (d / "batches").mkdir()
        (d / "models").mkdir()
        (d / LOCK_NAME).touch()

        base_dst = d / "models" / "iter000"
        base_src = Path(base_model)
        if base_src.is_dir():
            shutil.copytree(base_src, base_dst)
        else:
            base_dst.mkdir()
            shutil.copy(base_src, base_dst / base_src.name)

        _atomic_write(d / POOL_NAME, conllu.serialize(pool))
        manifest = ProjectManifest(
            name=name or d.name,
            created=time.strftime("%Y-%m-%dT%H:%M:%S"),
            batch_size=settings.batch_size,
            backend=backend,
            settings=settings,
            model_versions=["models/iter000"],
            batches=[],
        )
        project = cls(d, manifest)
        project._save()
        return project

    @classmethod
    def load(cls, directory) -> "Project":
        d = Path(directory)
        path = d / MANIFEST_NAME
        if not path.is_file():
            raise LoopError(f"{d} is not a project directory (missing {MANIFEST_NAME})")
        manifest = ProjectManifest.from_dict(json.loads(path.read_text(encoding="utf-8")))
        return cls(d, manifest)

    def _save(self) -> None:
        _atomic_write(self.dir / MANIFEST_NAME, json.dumps(self.manifest.as_dict(), indent=2) + "\n")

    def _exclusive(self):
        return _ProjectLock(self.dir / LOCK_NAME)

    # -- views -----------------------------------------------------------------

    def pool(self) -> conllu.Treebank:
        return conllu.parse_file(self.dir / POOL_NAME, strict=False)

    def used_sentence_ids(self) -> set[str]:
        used: set[str] = set()
        for b in self.manifest.batches:
            used.update(b.sentence_ids)
        return used

    def remaining_pool(self) -> list[conllu.Sentence]:
        used = self.used_sentence_ids()
        return [s for s in self.pool().sentences if s.sent_id not in used]

    def batch(self, index: int) -> BatchRecord:
        try:
            return self.manifest.batches[index]
        except IndexError:
            raise LoopError(f"no batch {index}") from None

    def current_model(self) -> str:
        return self.manifest.model_versions[-1]

    def in_progress_batch(self) -> BatchRecord | None:
        for b in self.manifest.batches:
            if b.state in _IN_PROGRESS:
                return b
        return None

    def pseudo(self, index: int) -> conllu.Treebank:
        return conllu.parse_file(self.dir / self.batch(index).pseudo_file)

    def gold(self, index: int) -> conllu.Treebank:
        b = self.batch(index)
        if b.state not in (GOLD_FINALIZED, FINETUNED) and not (b.state == FAILED and self._exists(b.gold_file)):
            raise LoopError(f"batch {index} has no finalized gold file (state {b.state})")
        return conllu.parse_file(self.dir / b.gold_file)

    def _exists(self, rel: str) -> bool:
        return (self.dir / rel).exists()

    def audit_entries(self, index: int) -> list[dict]:
        path = self.dir / self.batch(index).audit_file
        if not path.exists():
            return []
        entries = []
        for line in path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            try:
                entries.append(json.loads(line))
            except json.JSONDecodeError:
                break  # trailing partial record from a crash mid-append
        return entries

    def draft(self, index: int) -> conllu.Treebank:
        """Working copy = pseudo + audit replay; heals a stale draft file."""
        b = self.batch(index)
        replayed = _replay(self.pseudo(index), self.audit_entries(index))
        text = conllu.serialize(replayed)
        path = self.dir / b.draft_file
        if not path.exists() or path.read_text(encoding="utf-8") != text:
            _atomic_write(path, text)
        return replayed

    # -- the loop ----------------------------------------------------------------

    def next_batch(self) -> BatchRecord:
        """Sample from the pool and pseudo-annotate with the current model."""
        with self._exclusive():
            stuck = self.in_progress_batch()
            if stuck is not None:
                raise LoopError(f"batch {stuck.index} is still in progress (state {stuck.state})")
            remaining = self.remaining_pool()
            if not remaining:
                raise LoopError("the pool is exhausted")

            index = len(self.manifest.batches)
            k = min(self.manifest.batch_size, len(remaining))
            rng_key = f"{self.manifest.settings.sampling_seed}:{index}"
            picks = sorted(random.Random(rng_key).sample(range(len(remaining)), k))
            chosen = [remaining[i] for i in picks]

            model_used = self.current_model()
            pseudo_tb = self._predict(model_used, conllu.Treebank(tuple(chosen)))

            bdir = self.dir / f"batches/{index:03d}"
            bdir.mkdir(parents=True, exist_ok=True)
            record = BatchRecord(
                index=index,
                sentence_ids=[s.sent_id for s in chosen],
                state=PSEUDO_ANNOTATED,
                model_used=model_used,
            )
            text = conllu.serialize(pseudo_tb)
            _atomic_write(self.dir / record.pseudo_file, text)
            _atomic_write(self.dir / record.draft_file, text)
            _atomic_write(self.dir / record.audit_file, "")
            _failpoint("next-batch:before-manifest")
            self.manifest.batches.append(record)
            self._save()
            return record

    def _predict(self, model_ref: str, tb: conllu.Treebank) -> conllu.Treebank:
        if self.manifest.backend.kind == "builtin":
            model = refparser.load(self.dir / model_ref)
            return refparser.predict(model, tb)
        cfg = self._external_cfg(model_ref)
        return adapter.external_predict(cfg, tb)

    def _external_cfg(self, model_ref: str) -> adapter.ExternalParserConfig:
        b = self.manifest.backend
        return adapter.ExternalParserConfig(
            executable=b.executable,
            base_args=b.base_args,
            model_dir=str(self.dir / model_ref),
            timeout=b.timeout,
            env=b.env,
        )

    def submit_correction(self, batch_index: int, sentence_id: str, edits: list[Edit],
                          annotator: str = "") -> conllu.Sentence:
        """Apply edits to the draft; drafts may pass through invalid states."""
        with self._exclusive():
            b = self.batch(batch_index)
            if b.state not in (PSEUDO_ANNOTATED, IN_CORRECTION):
                raise LoopError(f"batch {batch_index} is not editable (state {b.state})")
            if sentence_id not in b.sentence_ids:
                raise LoopError(f"sentence {sentence_id!r} is not in batch {batch_index}")
            draft = self.draft(batch_index)
            sentence = draft.sentence(sentence_id)

            records = []
            for e in edits:
                try:
                    tok = sentence.token(e.token_id)
                except KeyError:
                    raise LoopError(f"sentence {sentence_id} has no token {e.token_id}") from None
                changes = {}
                entry = {
                    "ts": time.strftime("%Y-%m-%dT%H:%M:%S"),
                    "annotator": annotator,
                    "sentence_id": sentence_id,
                    "token_id": e.token_id,
                }
                if e.head is not None and e.head != tok.head:
                    changes["head"] = e.head
                    entry["head"] = {"old": tok.head, "new": e.head}
                if e.deprel is not None and e.deprel != tok.deprel:
                    changes["deprel"] = e.deprel
                    entry["deprel"] = {"old": tok.deprel, "new": e.deprel}
                if e.upos is not None and e.upos != tok.upos:
                    changes["upos"] = e.upos
                    entry["upos"] = {"old": tok.upos, "new": e.upos}
                if not changes:
                    continue
                sentence = conllu.with_token(sentence, e.token_id, **changes)
                records.append(entry)

            if records:
                with open(self.dir / b.audit_file, "a", encoding="utf-8") as f:
                    for entry in records:
                        f.write(json.dumps(entry, ensure_ascii=False) + "\n")
                    f.flush()
                    os.fsync(f.fileno())
                new_sentences = tuple(
                    sentence if s.sent_id == sentence_id else s for s in draft.sentences
                )
                _atomic_write(self.dir / b.draft_file,
                              conllu.serialize(conllu.Treebank(new_sentences)))
                if b.state == PSEUDO_ANNOTATED:
                    b.state = IN_CORRECTION
                    self._save()
            return sentence

    def finalize_batch(self, batch_index: int, idempotency_key: str | None = None) -> BatchReport:
        """Freeze the draft as gold and score it against the pseudo-annotation."""
        with self._exclusive():
            b = self.batch(batch_index)
            if b.state in (GOLD_FINALIZED, FINETUNED):
                if idempotency_key and b.idempotency.get("finalize") == idempotency_key:
                    return b.report
                raise LoopError(f"batch {batch_index} is already finalized")
            if b.state not in (PSEUDO_ANNOTATED, IN_CORRECTION):
                raise LoopError(f"batch {batch_index} cannot be finalized (state {b.state})")

            draft = self.draft(batch_index)
            violations = conllu.validate_treebank(draft)
            if violations:
                raise ValidationFailed(violations)

            pseudo_tb = self.pseudo(batch_index)
            report = self._score_batch(pseudo_tb, draft)
            _failpoint("finalize:before-gold")
            _atomic_write(self.dir / b.gold_file, conllu.serialize(draft))
            _failpoint("finalize:after-gold")
            _atomic_write(self.dir / b.report_file,
                          json.dumps(report.as_dict(), indent=2) + "\n")
            _atomic_write(self.dir / f"{b.dir_name}/confusion.csv", report.confusion.to_csv())
            _failpoint("finalize:after-report")
            b.report = report
            b.state = GOLD_FINALIZED
            if idempotency_key:
                b.idempotency["finalize"] = idempotency_key
            self._save()
            return report

    def _score_batch(self, pseudo_tb: conllu.Treebank, gold_tb: conllu.Treebank) -> BatchReport:
        st = self.manifest.settings
        att = metrics.attachment_scores(pseudo_tb, gold_tb,
                                        ignore_punct=st.ignore_punct,
                                        strip_subtypes=st.strip_subtypes)
        conf = metrics.confusion_matrix(pseudo_tb, gold_tb,
                                        ignore_punct=st.ignore_punct,
                                        strip_subtypes=st.strip_subtypes)
        words = sum(len(s.tokens) for s in gold_tb.sentences)
        edit_count = 0
        for ps, gs in zip(pseudo_tb.sentences, gold_tb.sentences):
            for pt, gt in zip(ps.tokens, gs.tokens):
                if pt.head != gt.head or pt.deprel != gt.deprel:
                    edit_count += 1
        return BatchReport(
            size=len(gold_tb.sentences),
            avg_word_count=words / len(gold_tb.sentences),
            edit_count=edit_count,
            attachment=att,
            confusion=conf,
            ignore_punct=st.ignore_punct,
            strip_subtypes=st.strip_subtypes,
        )

    def finetune_step(self, batch_index: int, idempotency_key: str | None = None) -> str:
        """Warm-start the backend on this batch's gold; extends the model lineage."""
        with self._exclusive():
            b = self.batch(batch_index)
            if b.state == FINETUNED:
                if idempotency_key and b.idempotency.get("finetune") == idempotency_key:
                    return b.model_produced
                raise LoopError(f"batch {batch_index} was already fine-tuned")
            if b.state != GOLD_FINALIZED:
                raise LoopError(f"batch {batch_index} is not finalized (state {b.state})")

            gold_tb = conllu.parse_file(self.dir / b.gold_file)
            version = len(self.manifest.model_versions)
            new_ref = f"models/iter{version:03d}"
            new_dir = self.dir / new_ref
            tmp_dir = self.dir / "models" / f".tmp-iter{version:03d}"
            for stale in (tmp_dir, new_dir):
                if stale.exists():
                    shutil.rmtree(stale)

            _failpoint("finetune:before-model")
            st = self.manifest.settings
            try:
                if self.manifest.backend.kind == "builtin":
                    base = refparser.load(self.dir / b.model_used)
                    tuned = refparser.train(gold_tb, epochs=st.finetune_epochs,
                                            seed=st.train_seed, base=base)
                    refparser.save(tuned, tmp_dir)
                else:
                    adapter.external_train(self._external_cfg(b.model_used), gold_tb, tmp_dir)
            except (adapter.AdapterError, refparser.ParserError) as e:
                b.state = FAILED
                self._save()
                raise LoopError(f"fine-tuning failed; model lineage unchanged: {e}") from e

            os.replace(tmp_dir, new_dir)
            _failpoint("finetune:after-model")
            self.manifest.model_versions.append(new_ref)
            b.model_produced = new_ref
            b.state = FINETUNED
            if idempotency_key:
                b.idempotency["finetune"] = idempotency_key
            self._save()
            return new_ref

    def trend_report(self) -> list[dict]:
        """Per-batch series for judging whether correction effort shrinks."""
        series = []
        for b in self.manifest.batches:
            if b.report is None:
                continue
            series.append({
                "batch": b.index,
                "size": b.report.size,
                "avg_word_count": b.report.avg_word_count,
                "uas": b.report.attachment.uas_f1,
                "las": b.report.attachment.las_f1,
                "edit_count": b.report.edit_count,
                "state": b.state,
            })
        if not series:
            raise LoopError("no finalized batches yet")
        return series

    def labels(self) -> list[str]:
        """Deprel vocabulary for autocomplete: model labels + data labels."""
        out: set[str] = set()
        if self.manifest.backend.kind == "builtin":
            try:
                out.update(refparser.load(self.dir / self.current_model()).label_set)
            except (refparser.ParserError, OSError):
                pass
        for s in self.pool().sentences:
            for t in s.tokens:
                if t.deprel != "_":
                    out.add(t.deprel)
        return sorted(out)


class _ProjectLock:
    def __init__(self, path: Path):
        self.path = path
        self.fd: int | None = None

    def __enter__(self):
        self.fd = os.open(self.path, os.O_RDWR | os.O_CREAT)
        fcntl.flock(self.fd, fcntl.LOCK_EX)
        return self

    def __exit__(self, *exc):
        if self.fd is not None:
            fcntl.flock(self.fd, fcntl.LOCK_UN)
            os.close(self.fd)
            self.fd = None


def _replay(pseudo: conllu.Treebank, entries: list[dict]) -> conllu.Treebank:
    """Reapply audit records on top of the pseudo-annotation."""
    sentences = {s.sent_id: s for s in pseudo.sentences}
    for e in entries:
        s = sentences.get(e["sentence_id"])
        if s is None:
            continue
        changes = {}
        for fld in ("head", "deprel", "upos"):
            if fld in e:
                changes[fld] = e[fld]["new"]
        if changes:
            sentences[e["sentence_id"]] = conllu.with_token(s, e["token_id"], **changes)
    return conllu.Treebank(tuple(sentences[s.sent_id] for s in pseudo.sentences))


def correct_from_reference(project: Project, batch_index: int, reference: conllu.Treebank,
                           annotator: str = "scripted") -> int:
    """Scripted annotator: replace pseudo heads/deprels/upos with reference ones.

    Returns the number of tokens touched. Sentences are matched by sent_id.
    """
    record = project.batch(batch_index)
    draft = project.draft(batch_index)
    touched = 0
    for sid in record.sentence_ids:
        ref = reference.sentence(sid)
        cur = draft.sentence(sid)
        edits = []
        for rt, ct in zip(ref.tokens, cur.tokens):
            if (rt.head, rt.deprel, rt.upos) != (ct.head, ct.deprel, ct.upos):
                edits.append(Edit(token_id=ct.id, head=rt.head, deprel=rt.deprel, upos=rt.upos))
        if edits:
            project.submit_correction(batch_index, sid, edits, annotator=annotator)
            touched += len(edits)
    return touched
