"""Human-in-the-loop treebank construction workbench.

Iteratively pseudo-annotate a batch of sentences with a dependency parser,
let annotators correct the output in a browser, score the corrections, and
fine-tune the parser before sampling the next batch.
"""

__version__ = "0.1.0"
