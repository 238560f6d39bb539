"""Python access to the task sequencing core.

Corpus records travel as JSON lines, the same format the CLI writes.
"""

import json

from . import _taskseq
from ._taskseq import Error, ParseError, block_names, corpus_hash, dimension, generate_corpus, train

__all__ = [
    "Error",
    "ParseError",
    "block_names",
    "corpus_hash",
    "cross_validate",
    "dimension",
    "generate_corpus",
    "proposals",
    "rollout",
    "train",
]


def rollout(weights, line, max_steps=25):
    return json.loads(_taskseq.rollout(weights, line, max_steps))


def proposals(weights, line, k=3):
    return json.loads(_taskseq.proposals(weights, line, k))


def cross_validate(lines, folds=6, seed=0, C=None):
    if C is None:
        return json.loads(_taskseq.cross_validate(lines, folds, seed))
    return json.loads(_taskseq.cross_validate(lines, folds, seed, C))
