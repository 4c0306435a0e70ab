"""Synthetic probing tasks whose helpful capabilities are known by construction."""
from __future__ import annotations

import numpy as np

from .codelength import BoundedContinuous, Categorical
from .data import Dataset, Example
from .errors import ConfigError


def _distractors(vocab: int) -> list[str]:
    return [f"w{i}" for i in range(vocab)]


def _balanced_labels(n: int, rng: np.random.Generator) -> np.ndarray:
    """Seeded order of ``n // 2`` zeros and ``n - n // 2`` ones."""
    return rng.permutation(np.arange(n) % 2)


def gen_count_comparison(n: int, vocab: int = 50, max_count: int = 9, seed: int = 0,
                         max_distractors: int = 8) -> Dataset:
    """Bags with ``c1`` copies of ``A`` and ``c2`` copies of ``B``; label is ``c1 > c2``.

    Each example carries the counts as an ``oracle`` auxiliary field
    (``["c1=<c1>", "c2=<c2>"]``). Ties are resampled and the two counts are
    swapped when needed to hit a balanced label sequence.
    """
    if n < 100:
        raise ConfigError(f"count comparison needs n >= 100, got {n}")
    if max_count < 1:
        raise ConfigError(f"max_count must be >= 1, got {max_count}")
    rng = np.random.default_rng(seed)
    words = _distractors(vocab)
    labels = _balanced_labels(n, rng)
    examples = []
    for i in range(n):
        c1 = c2 = 0
        while c1 == c2:
            c1, c2 = (int(c) for c in rng.integers(0, max_count + 1, size=2))
        if int(c1 > c2) != labels[i]:
            c1, c2 = c2, c1
        k = int(rng.integers(0, max_distractors + 1)) if vocab else 0
        tokens = ["A"] * c1 + ["B"] * c2 + [words[j] for j in rng.integers(0, vocab, size=k)]
        tokens = [tokens[j] for j in rng.permutation(len(tokens))]
        examples.append(Example(tuple(tokens), int(c1 > c2),
                                auxiliary={"oracle": (f"c1={c1}", f"c2={c2}")}, index=i))
    return Dataset(tuple(examples), Categorical(2), name="count_comparison")


def gen_order_task(n: int, seed: int = 0, length: int = 4, vocab: int = 10) -> Dataset:
    """Fixed-length sequences labelled by whether the first token sorts before the last.

    First and last tokens always differ and are swapped when needed to hit a
    balanced label sequence, so given only the bag of tokens both labels are
    equally likely.
    """
    if length < 2 or vocab < 2:
        raise ConfigError("order task needs length >= 2 and vocab >= 2")
    rng = np.random.default_rng(seed)
    words = [f"t{i:02d}" for i in range(vocab)]
    labels = _balanced_labels(n, rng)
    examples = []
    for i in range(n):
        idx = rng.integers(0, vocab, size=length)
        while idx[0] == idx[-1]:
            idx[-1] = rng.integers(0, vocab)
        if int(idx[0] < idx[-1]) != labels[i]:
            idx[0], idx[-1] = idx[-1], idx[0]
        tokens = tuple(words[j] for j in idx)
        examples.append(Example(tokens, int(tokens[0] < tokens[-1]), index=i))
    return Dataset(tuple(examples), Categorical(2), name="order")


def gen_wordlist_bias_task(n: int, list_a, list_b, seed: int = 0, length: int = 60,
                           per_example: int = 6, filler_vocab: int = 50) -> Dataset:
    """Label 1 iff any ``list_a`` word is present.

    Positive examples carry ``per_example`` words from ``list_a``; every
    example independently carries ``per_example`` words from ``list_b`` with
    probability 1/2, so both lists occur at the same rate. The rest is filler.
    """
    list_a, list_b = list(list_a), list(list_b)
    if not list_a or not list_b:
        raise ConfigError("both word lists must be non-empty")
    overlap = sorted(set(list_a) & set(list_b))
    if overlap:
        raise ConfigError(f"word lists overlap: {overlap}")
    if length < 2 * per_example:
        raise ConfigError("length too short for the inserted words")
    rng = np.random.default_rng(seed)
    filler = [f"f{i}" for i in range(filler_vocab)]
    labels = _balanced_labels(n, rng)
    examples = []
    for i in range(n):
        label = int(labels[i])
        special = []
        if label:
            special += [list_a[j] for j in rng.integers(0, len(list_a), size=per_example)]
        if rng.random() < 0.5:
            special += [list_b[j] for j in rng.integers(0, len(list_b), size=per_example)]
        tokens = [filler[j] for j in rng.integers(0, filler_vocab, size=length - len(special))]
        tokens += special
        tokens = tuple(tokens[j] for j in rng.permutation(len(tokens)))
        examples.append(Example(tokens, label, index=i))
    return Dataset(tuple(examples), Categorical(2), name="wordlist_bias")


def gen_fraction_regression(n: int, seed: int = 0, min_len: int = 5, max_len: int = 20,
                            hi: float = 5.0) -> Dataset:
    """Sequences of ``A``/``B`` tokens labelled ``hi * fraction_of_A`` in ``[0, hi]``."""
    if min_len < 1 or max_len < min_len:
        raise ConfigError("need 1 <= min_len <= max_len")
    rng = np.random.default_rng(seed)
    examples = []
    for i in range(n):
        length = int(rng.integers(min_len, max_len + 1))
        frac = rng.random()
        tokens = tuple("A" if u < frac else "B" for u in rng.random(length))
        label = hi * tokens.count("A") / length
        examples.append(Example(tokens, float(label), index=i))
    return Dataset(tuple(examples), BoundedContinuous(0.0, hi), name="fraction_regression")


GENERATORS = {
    "count_comparison": gen_count_comparison,
    "order": gen_order_task,
    "wordlist_bias": gen_wordlist_bias_task,
    "fraction_regression": gen_fraction_regression,
}
