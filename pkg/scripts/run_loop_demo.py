#!/usr/bin/env python3
"""End-to-end demo of the iterative annotation loop on the bundled sample.

Trains a base parser on the first 200 sentences, then runs two full
iterations over the remaining 100: sample 50 -> pseudo-annotate -> scripted
"annotator" restores the reference annotation -> finalize -> fine-tune.
Prints the per-batch comparison table (size, average word count, UAS, LAS,
edit count) so the cross-batch trend is visible.

Usage: run_loop_demo.py [--seed 0] [--workdir DIR] [--keep]
"""

from __future__ import annotations

import argparse
import shutil
import sys
import tempfile
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from treebench import conllu, loop, refparser

DATA = Path(__file__).resolve().parents[1] / "tests" / "data" / "ud_sample.conllu"


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0, help="Batch sampling seed.")
    ap.add_argument("--workdir", default=None, help="Where to build the project (default: temp dir).")
    ap.add_argument("--keep", action="store_true", help="Keep the project directory afterwards.")
    args = ap.parse_args()

    workdir = Path(args.workdir) if args.workdir else Path(tempfile.mkdtemp(prefix="treebench-demo-"))
    workdir.mkdir(parents=True, exist_ok=True)

    corpus = conllu.parse_file(DATA)
    base_train = conllu.Treebank(corpus.sentences[:200])
    pool = conllu.Treebank(corpus.sentences[200:])
    settings = loop.Settings(batch_size=50, sampling_seed=args.seed)

    print(f"training base model on {len(base_train.sentences)} sentences ...")
    t0 = time.time()
    base = refparser.train(base_train, epochs=settings.train_epochs, seed=settings.train_seed)
    model_dir = workdir / "base-model"
    refparser.save(base, model_dir)
    print(f"  done in {time.time() - t0:.1f}s ({base.updates_seen} updates, "
          f"{len(base.label_set)} labels)")

    project_dir = workdir / "project"
    if project_dir.exists():
        shutil.rmtree(project_dir)
    project = loop.Project.create(project_dir, pool, model_dir, settings=settings,
                                  name="loop-demo")

    for i in range(2):
        record = project.next_batch()
        edits = loop.correct_from_reference(project, i, corpus)
        project.finalize_batch(i)
        ref = project.finetune_step(i)
        print(f"iteration {i + 1}: batch of {len(record.sentence_ids)} with {record.model_used}, "
              f"{edits} token corrections, fine-tuned into {ref}")

    print()
    print("batch  size  avg_words  UAS      LAS      edits")
    for row in project.trend_report():
        print(f"{row['batch'] + 1:>5}  {row['size']:>4}  {row['avg_word_count']:>9.2f}  "
              f"{row['uas']:.4f}   {row['las']:.4f}  {row['edit_count']:>5}")

    series = project.trend_report()
    direction = "rose" if series[1]["uas"] >= series[0]["uas"] else "fell"
    print(f"\npseudo-annotation UAS {direction} from {series[0]['uas']:.4f} to {series[1]['uas']:.4f} "
          f"after one fine-tuning step; corrections needed: "
          f"{series[0]['edit_count']} -> {series[1]['edit_count']}")

    if args.keep or args.workdir:
        print(f"project kept at {project_dir}")
        print(f"inspect it with:  treebench report --project {project_dir}")
        print(f"or serve the UI:  treebench serve --project {project_dir}")
    else:
        shutil.rmtree(workdir)


if __name__ == "__main__":
    main()
