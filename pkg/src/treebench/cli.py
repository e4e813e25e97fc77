"""Command-line entry points for the annotation workbench."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import agreement, conllu, loop, metrics, refparser


class Flags:
    def __init__(self):
        self.seed: int | None = None
        self.ignore_punct = False
        self.strip_subtypes = False


pass_flags = click.make_pass_decorator(Flags, ensure=True)


@click.group()
@click.option("--seed", type=int, default=None, help="Sampling/training seed override.")
@click.option("--ignore-punct", is_flag=True, help="Exclude punctuation from all scores.")
@click.option("--strip-subtypes", is_flag=True, help="Compare deprels without subtypes.")
@click.pass_context
def main(ctx, seed, ignore_punct, strip_subtypes):
    """Human-in-the-loop treebank construction workbench."""
    flags = ctx.ensure_object(Flags)
    flags.seed = seed
    flags.ignore_punct = ignore_punct
    flags.strip_subtypes = strip_subtypes


def _fail(e: Exception) -> None:
    raise click.ClickException(str(e))


def _load_project(project) -> loop.Project:
    try:
        return loop.Project.load(project)
    except loop.LoopError as e:
        _fail(e)


@main.command()
@click.option("--project", required=True, type=click.Path(), help="Project directory to create.")
@click.option("--pool", required=True, type=click.Path(exists=True), help="CoNLL-U sentence pool.")
@click.option("--base-model", required=True, type=click.Path(exists=True),
              help="Initial model: a refparser model file/dir, or the external tool's model dir.")
@click.option("--batch-size", type=int, default=50, show_default=True)
@click.option("--backend", type=click.Choice(["builtin", "external"]), default="builtin",
              show_default=True)
@click.option("--external-cmd", default=None,
              help="External parser command line (executable + base args), e.g. "
                   "'python -m treebench.backend'.")
@click.option("--timeout", type=float, default=300.0, show_default=True,
              help="External parser timeout in seconds.")
@click.option("--misc-orig-key", default="Orig", show_default=True,
              help="MISC key holding the second-script form.")
@click.option("--train-epochs", type=int, default=8, show_default=True)
@click.option("--finetune-epochs", type=int, default=5, show_default=True)
@click.option("--name", default=None, help="Project name (defaults to the directory name).")
@pass_flags
def init(flags, project, pool, base_model, batch_size, backend, external_cmd, timeout,
         misc_orig_key, train_epochs, finetune_epochs, name):
    """Create a project around a sentence pool and a base model."""
    try:
        pool_tb = conllu.parse_file(pool, strict=False)
        settings = loop.Settings(
            batch_size=batch_size,
            ignore_punct=flags.ignore_punct,
            strip_subtypes=flags.strip_subtypes,
            misc_orig_key=misc_orig_key,
            sampling_seed=flags.seed if flags.seed is not None else 0,
            train_epochs=train_epochs,
            finetune_epochs=finetune_epochs,
        )
        spec = loop.BackendSpec()
        if backend == "external":
            if not external_cmd:
                raise click.ClickException("--backend external requires --external-cmd")
            parts = external_cmd.split()
            spec = loop.BackendSpec(kind="external", executable=parts[0],
                                    base_args=tuple(parts[1:]), timeout=timeout)
        p = loop.Project.create(project, pool_tb, base_model, settings=settings,
                                backend=spec, name=name)
    except (loop.LoopError, conllu.ConlluError) as e:
        _fail(e)
    click.echo(f"initialized {p.dir} with {len(pool_tb.sentences)} pool sentences")


@main.command()
@click.option("--pool", "corpus_path", required=True, type=click.Path(exists=True),
              help="Gold CoNLL-U training corpus.")
@click.option("--out", required=True, type=click.Path(), help="Model output directory.")
@click.option("--epochs", type=int, default=8, show_default=True)
@pass_flags
def train(flags, corpus_path, out, epochs):
    """Train a base model for the builtin parser."""
    try:
        corpus = conllu.parse_file(corpus_path)
        model = refparser.train(corpus, epochs=epochs,
                                seed=flags.seed if flags.seed is not None else 1)
        path = refparser.save(model, out)
    except (conllu.ConlluError, refparser.ParserError) as e:
        _fail(e)
    click.echo(f"trained on {len(corpus.sentences)} sentences "
               f"({model.updates_seen} updates), saved to {path}")


@main.command("next-batch")
@click.option("--project", required=True, type=click.Path(exists=True))
def next_batch(project):
    """Sample the next batch and pseudo-annotate it with the current model."""
    p = _load_project(project)
    try:
        record = p.next_batch()
    except loop.LoopError as e:
        _fail(e)
    click.echo(f"batch {record.index}: {len(record.sentence_ids)} sentences "
               f"pseudo-annotated with {record.model_used}")


@main.command()
@click.option("--project", required=True, type=click.Path(exists=True))
@click.option("--batch", required=True, type=int)
@click.option("--sentence", "sentence_id", required=True)
@click.option("--token", "token_id", required=True, type=int)
@click.option("--head", type=int, default=None)
@click.option("--deprel", default=None)
@click.option("--upos", default=None)
@click.option("--annotator", default="", help="Free-text annotator id for the audit log.")
def edit(project, batch, sentence_id, token_id, head, deprel, upos, annotator):
    """Apply one token correction to a batch draft (scriptable)."""
    if head is None and deprel is None and upos is None:
        raise click.ClickException("nothing to change: pass --head, --deprel and/or --upos")
    p = _load_project(project)
    try:
        before = p.draft(batch).sentence(sentence_id).token(token_id)
        s = p.submit_correction(batch, sentence_id,
                                [loop.Edit(token_id, head=head, deprel=deprel, upos=upos)],
                                annotator=annotator)
    except (loop.LoopError, KeyError) as e:
        _fail(e)
    after = s.token(token_id)
    if (before.head, before.deprel, before.upos) == (after.head, after.deprel, after.upos):
        click.echo(f"{sentence_id} token {token_id}: already had the requested values, no change")
    else:
        click.echo(f"edited {sentence_id} token {token_id}")
    for v in conllu.validate(s):
        click.echo(f"  draft violation: {v}")


@main.command()
@click.option("--project", required=True, type=click.Path(exists=True))
@click.option("--batch", required=True, type=int)
def finalize(project, batch):
    """Validate the draft, freeze it as gold, and score pseudo vs gold."""
    p = _load_project(project)
    try:
        report = p.finalize_batch(batch)
    except loop.ValidationFailed as e:
        raise click.ClickException(str(e)) from None
    except loop.LoopError as e:
        _fail(e)
    click.echo(_format_report(batch, report))


@main.command()
@click.option("--project", required=True, type=click.Path(exists=True))
@click.option("--batch", required=True, type=int)
def finetune(project, batch):
    """Fine-tune the parser on this batch's gold annotation."""
    p = _load_project(project)
    try:
        ref = p.finetune_step(batch)
    except loop.LoopError as e:
        _fail(e)
    click.echo(f"new model: {ref}")


def _format_report(index: int, report: loop.BatchReport) -> str:
    lines = [
        f"batch {index}: size={report.size} avg_words={report.avg_word_count:.2f} "
        f"edits={report.edit_count}",
        f"  UAS F1 {report.attachment.uas_f1:.4f}   LAS F1 {report.attachment.las_f1:.4f}",
        f"  flags: ignore_punct={report.ignore_punct} strip_subtypes={report.strip_subtypes}",
    ]
    return "\n".join(lines)


@main.command()
@click.option("--project", required=True, type=click.Path(exists=True))
@click.option("--batch", type=int, default=None, help="Single batch; default: all + trend.")
@click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")
def report(project, batch, as_json):
    """Print batch reports and the cross-batch trend."""
    p = _load_project(project)
    try:
        if batch is not None:
            rec = p.batch(batch)
            if rec.report is None:
                raise click.ClickException(f"batch {batch} has no report yet")
            if as_json:
                click.echo(json.dumps(rec.report.as_dict(), indent=2))
            else:
                click.echo(_format_report(batch, rec.report))
            return
        series = p.trend_report()
    except loop.LoopError as e:
        _fail(e)
    if as_json:
        click.echo(json.dumps({"series": series}, indent=2))
        return
    click.echo("batch  size  avg_words  UAS      LAS      edits  state")
    for row in series:
        click.echo(f"{row['batch']:>5}  {row['size']:>4}  {row['avg_word_count']:>9.2f}  "
                   f"{row['uas']:.4f}   {row['las']:.4f}  {row['edit_count']:>5}  {row['state']}")


@main.command()
@click.option("--project", required=True, type=click.Path(exists=True))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--ui-dir", type=click.Path(), default=None,
              help="Built UI bundle to serve at / (frontend/dist).")
def serve(project, host, port, ui_dir):
    """Serve the correction UI and the JSON API for one project."""
    from .service import serve as run

    if ui_dir is None:
        candidate = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        if candidate.is_dir():
            ui_dir = str(candidate)
    run(project, host=host, port=port, ui_dir=ui_dir)


@main.command("eval")
@click.argument("system", type=click.Path(exists=True))
@click.argument("gold", type=click.Path(exists=True))
@pass_flags
def eval_cmd(flags, system, gold):
    """UAS/LAS of SYSTEM against GOLD (both CoNLL-U)."""
    try:
        score = metrics.attachment_scores(
            conllu.parse_file(system, strict=False), conllu.parse_file(gold),
            ignore_punct=flags.ignore_punct, strip_subtypes=flags.strip_subtypes)
    except (conllu.ConlluError, metrics.MetricsError) as e:
        _fail(e)
    click.echo(metrics.format_attachment_report(score, flags.ignore_punct, flags.strip_subtypes))


@main.command()
@click.argument("annotator_a", type=click.Path(exists=True))
@click.argument("annotator_b", type=click.Path(exists=True))
@click.option("--disagreements", type=click.Path(), default=None,
              help="Also write the disagreement list as CSV.")
@pass_flags
def kappa(flags, annotator_a, annotator_b, disagreements):
    """Cohen's kappa and inter-annotator UAS/LAS between two annotations."""
    try:
        study = agreement.study_from_files(annotator_a, annotator_b)
        rep = agreement.agreement_report(study, ignore_punct=flags.ignore_punct,
                                         strip_subtypes=flags.strip_subtypes)
    except (conllu.ConlluError, agreement.AgreementError, metrics.MetricsError) as e:
        _fail(e)
    click.echo(agreement.format_report(rep))
    if disagreements:
        Path(disagreements).write_text(agreement.disagreements_csv(study), encoding="utf-8")
        click.echo(f"wrote disagreement list to {disagreements}")


@main.command()
@click.argument("system", type=click.Path(exists=True))
@click.argument("gold", type=click.Path(exists=True))
@click.option("--top-k", type=int, default=None, help="Bucket labels beyond the k most frequent.")
@click.option("--csv", "csv_path", type=click.Path(), default=None, help="Write CSV here instead of stdout.")
@pass_flags
def confusion(flags, system, gold, top_k, csv_path):
    """Label confusion matrix of SYSTEM against GOLD, as CSV."""
    try:
        cm = metrics.confusion_matrix(
            conllu.parse_file(system, strict=False), conllu.parse_file(gold),
            top_k=top_k, ignore_punct=flags.ignore_punct, strip_subtypes=flags.strip_subtypes)
    except (conllu.ConlluError, metrics.MetricsError) as e:
        _fail(e)
    if csv_path:
        Path(csv_path).write_text(cm.to_csv(), encoding="utf-8")
        click.echo(f"wrote {csv_path}")
    else:
        click.echo(cm.to_csv(), nl=False)


@main.command()
@click.argument("files", nargs=-1, type=click.Path(exists=True))
@click.option("--project", type=click.Path(exists=True), default=None,
              help="Validate a project's pool and finalized batches instead of files.")
def validate(files, project):
    """Structural validation of CoNLL-U files (or of a whole project)."""
    targets: list[Path] = [Path(f) for f in files]
    if project:
        p = _load_project(project)
        targets.append(p.dir / loop.POOL_NAME)
        for b in p.manifest.batches:
            for rel in (b.pseudo_file, b.gold_file):
                path = p.dir / rel
                if path.exists():
                    targets.append(path)
    if not targets:
        raise click.ClickException("nothing to validate: pass files or --project")

    failures = 0
    for path in targets:
        try:
            tb = conllu.parse_file(path, strict=False)
        except conllu.ConlluError as e:
            click.echo(f"{path}: PARSE ERROR {e}")
            failures += 1
            continue
        bad = conllu.validate_treebank(tb)
        if bad:
            failures += 1
            click.echo(f"{path}: {len(bad)} violations")
            for v in bad:
                click.echo(f"  {v}")
        else:
            click.echo(f"{path}: OK ({len(tb.sentences)} sentences)")
    if failures:
        sys.exit(1)


if __name__ == "__main__":
    main()
