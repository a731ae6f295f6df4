"""Random unitary ensembles, fidelity uncertainty relations, locking and l1(l2) embeddings."""

__version__ = "0.1.0"
