"""Hashed bag-of-n-gram features (no vocabulary; collisions accepted)."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from sklearn.feature_extraction import FeatureHasher

from .errors import ConfigError


@dataclass(frozen=True)
class FeatureConfig:
    dim: int = 2**18
    ngram: int = 2
    positional: bool = False
    binary: bool = False
    ignore: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "ignore", tuple(self.ignore))
        if self.dim < 2:
            raise ConfigError(f"hash dimension must be >= 2, got {self.dim}")
        if self.ngram not in (1, 2):
            raise ConfigError(f"ngram order must be 1 or 2, got {self.ngram}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ignore"] = list(self.ignore)
        return d


def feature_strings(tokens: Sequence[str], cfg: FeatureConfig) -> list[str]:
    if cfg.ignore:
        tokens = [t for t in tokens if t not in cfg.ignore]
    feats = ["u:" + t for t in tokens]
    if cfg.ngram >= 2:
        feats += [f"b:{a}\x1f{b}" for a, b in zip(tokens, tokens[1:])]
    if cfg.positional:
        n = len(tokens)
        feats += [f"p{i}:{t}" for i, t in enumerate(tokens)]
        feats += [f"r{n - 1 - i}:{t}" for i, t in enumerate(tokens)]
    return feats


def featurize(token_lists: Sequence[Sequence[str]], cfg: FeatureConfig) -> sp.csr_matrix:
    """Count (or presence) matrix with canonically ordered indices.

    Canonical ordering makes the matrix, and every product taken with it,
    independent of the token order inside an example when no order-aware
    features are enabled.
    """
    hasher = FeatureHasher(n_features=cfg.dim, input_type="string", alternate_sign=False)
    X = hasher.transform(feature_strings(t, cfg) for t in token_lists).tocsr()
    X.sum_duplicates()
    X.sort_indices()
    if cfg.binary:
        X.data[:] = 1.0
    return X.astype(np.float64)


class ColumnMap:
    """Restrict a hashed matrix to the columns seen during training."""

    def __init__(self, X_train: sp.csr_matrix):
        self.columns = np.unique(X_train.indices)

    @property
    def size(self) -> int:
        return len(self.columns)

    def transform(self, X: sp.csr_matrix) -> sp.csr_matrix:
        X = X.tocsr()
        pos = np.searchsorted(self.columns, X.indices)
        pos_clip = np.minimum(pos, max(self.size - 1, 0))
        keep = (pos < self.size) & (self.columns[pos_clip] == X.indices) if self.size else np.zeros(len(X.indices), bool)
        rows = np.repeat(np.arange(X.shape[0]), np.diff(X.indptr))
        out = sp.csr_matrix(
            (X.data[keep], (rows[keep], pos[keep])), shape=(X.shape[0], max(self.size, 1))
        )
        out.sum_duplicates()
        out.sort_indices()
        return out
