"""Built-in trainable dependency parser: averaged perceptron + Chu-Liu/Edmonds."""

from .decoder import DecodeError, EdgeScoreTable, decode, max_arborescence, tree_score
from .features import FeatureVector, HASH_BITS, TEMPLATE_VERSION
from .model import (
    MODEL_FILENAME,
    ParserError,
    ParserModel,
    TemplateVersionError,
    UntrainedModelError,
    load,
    predict,
    save,
    score_edges,
    train,
)

__all__ = [
    "DecodeError", "EdgeScoreTable", "decode", "max_arborescence", "tree_score",
    "FeatureVector", "HASH_BITS", "TEMPLATE_VERSION",
    "MODEL_FILENAME", "ParserError", "ParserModel", "TemplateVersionError",
    "UntrainedModelError", "load", "predict", "save", "score_edges", "train",
]
