"""Subprocess protocol for plugging an external parser into the loop.

Protocol (normative for external tools):
  <executable> <base_args...> predict --model <dir>            CoNLL-U on stdin -> CoNLL-U on stdout
  <executable> <base_args...> train   --model <dir> --out <dir> CoNLL-U on stdin; exit 0 and a
                                                                non-empty out dir mean success
Diagnostics belong on stderr; exit 0 is the only success signal. Transport is
CoNLL-U over the standard streams, so anything that can read and write files
can be a backend.
"""

from __future__ import annotations

import os
import shutil
import subprocess
from dataclasses import dataclass
from pathlib import Path

from . import conllu


class AdapterError(Exception):
    """The external parser failed (nonzero exit, crash)."""

    def __init__(self, message: str, returncode: int | None = None, stderr: str = ""):
        tail = stderr.strip().splitlines()[-8:]
        if tail:
            message = message + "\n" + "\n".join("  stderr: " + l for l in tail)
        super().__init__(message)
        self.returncode = returncode
        self.stderr = stderr


class AdapterTimeout(AdapterError):
    pass


class ProtocolError(AdapterError):
    """The external parser exited 0 but violated the protocol contract."""


@dataclass(frozen=True)
class ExternalParserConfig:
    executable: str
    model_dir: str
    base_args: tuple[str, ...] = ()
    timeout: float = 300.0
    env: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        resolved = shutil.which(self.executable)
        if resolved is None and not (os.path.isfile(self.executable) and os.access(self.executable, os.X_OK)):
            raise ValueError(f"external parser executable not runnable: {self.executable!r}")


def _run(cfg: ExternalParserConfig, verb_args: list[str], stdin_text: str) -> str:
    cmd = [cfg.executable, *cfg.base_args, *verb_args]
    env = dict(os.environ, **dict(cfg.env)) if cfg.env else None
    try:
        proc = subprocess.run(
            cmd, input=stdin_text, capture_output=True, text=True,
            timeout=cfg.timeout, env=env,
        )
    except subprocess.TimeoutExpired as e:
        raise AdapterTimeout(f"external parser timed out after {cfg.timeout}s: {' '.join(cmd)}") from e
    if proc.returncode != 0:
        raise AdapterError(
            f"external parser exited {proc.returncode}: {' '.join(cmd)}",
            returncode=proc.returncode, stderr=proc.stderr,
        )
    return proc.stdout


def external_predict(cfg: ExternalParserConfig, tb: conllu.Treebank) -> conllu.Treebank:
    """Pseudo-annotate ``tb`` with the external parser; output is validated."""
    stdout = _run(cfg, ["predict", "--model", str(cfg.model_dir)], conllu.serialize(tb))
    try:
        result = conllu.parse(stdout)
    except conllu.ConlluError as e:
        raise ProtocolError(f"external parser output is not valid CoNLL-U: {e}") from e

    if len(result.sentences) != len(tb.sentences):
        raise ProtocolError(
            f"sentence count {len(result.sentences)} != {len(tb.sentences)} in external parser output")
    for i, (got, want) in enumerate(zip(result.sentences, tb.sentences)):
        got_forms = tuple(t.form for t in got.tokens)
        want_forms = tuple(t.form for t in want.tokens)
        if got_forms != want_forms:
            label = want.sent_id or f"#{i + 1}"
            raise ProtocolError(f"external parser changed the FORM sequence of sentence {label}")
    return result


def external_train(cfg: ExternalParserConfig, corpus: conllu.Treebank, out_model_dir) -> str:
    """Fine-tune the external parser; returns the new model directory."""
    out = Path(out_model_dir)
    out.mkdir(parents=True, exist_ok=True)
    _run(cfg, ["train", "--model", str(cfg.model_dir), "--out", str(out)], conllu.serialize(corpus))
    if not any(out.iterdir()):
        raise ProtocolError(f"external parser exited 0 but left {out} empty")
    return str(out)
