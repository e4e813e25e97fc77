"""Builtin parser exposed through the external-parser subprocess protocol.

    python -m treebench.backend [--epochs N] [--seed N] predict --model DIR
    python -m treebench.backend [--epochs N] [--seed N] train --model DIR --out DIR

Wraps refparser behind the exact stdin/stdout contract the adapter speaks, so
the subprocess path can be exercised (and compared bit for bit) against the
in-process path, and so other machines can call this parser like any other
external backend.
"""

from __future__ import annotations

import argparse
import sys

from . import conllu, refparser


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="treebench.backend", description=__doc__)
    ap.add_argument("--epochs", type=int, default=5)
    ap.add_argument("--seed", type=int, default=1)
    sub = ap.add_subparsers(dest="verb", required=True)
    p_pred = sub.add_parser("predict")
    p_pred.add_argument("--model", required=True)
    p_train = sub.add_parser("train")
    p_train.add_argument("--model", required=True)
    p_train.add_argument("--out", required=True)
    args = ap.parse_args(argv)

    text = sys.stdin.read()
    try:
        tb = conllu.parse(text, strict=args.verb == "train")
        model = refparser.load(args.model)
        if args.verb == "predict":
            sys.stdout.write(conllu.serialize(refparser.predict(model, tb)))
        else:
            tuned = refparser.train(tb, epochs=args.epochs, seed=args.seed, base=model)
            refparser.save(tuned, args.out)
    except (conllu.ConlluError, refparser.ParserError, OSError) as e:
        print(f"treebench.backend: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
