"""Examples, datasets and JSONL ingestion.

JSONL layout, one UTF-8 object per line::

    {"label_space": {"kind": "continuous", "lo": 0, "hi": 5}}      # optional header
    {"tokens": ["a", "b"], "label": "yes",
     "annotations": {"pos": ["DET", "NOUN"], "rationale": [false, true]},
     "auxiliary": {"oracle": ["c1=3", "c2=1"]}}

``annotations`` hold per-token arrays (same length as ``tokens``);
``auxiliary`` holds free-length token lists. ``text`` may replace ``tokens``
and is whitespace-split.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from .codelength import BoundedContinuous, Categorical, LabelSpace, label_space_from_dict
from .errors import DataError, InvalidLabelError

DEFAULT_CAP = 10_000

Label = Union[int, float]


@dataclass(frozen=True)
class Example:
    tokens: tuple[str, ...]
    label: Label
    annotations: dict = field(default_factory=dict)
    auxiliary: dict = field(default_factory=dict)
    index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "annotations", {k: tuple(v) for k, v in self.annotations.items()})
        object.__setattr__(self, "auxiliary", {k: tuple(v) for k, v in self.auxiliary.items()})
        for name, values in self.annotations.items():
            if len(values) != len(self.tokens):
                raise DataError(
                    f"example {self.index}: annotation {name!r} has {len(values)} entries "
                    f"for {len(self.tokens)} tokens"
                )

    def with_tokens(self, tokens: Sequence[str], annotations: dict | None = None) -> "Example":
        """Copy with new tokens; per-token annotations are dropped unless supplied."""
        return replace(self, tokens=tuple(tokens), annotations=annotations or {})


@dataclass(frozen=True)
class Dataset:
    examples: tuple[Example, ...]
    label_space: LabelSpace
    name: str = "dataset"
    checksum: str = ""
    label_names: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "examples", tuple(self.examples))
        for ex in self.examples:
            _check_label(ex.label, self.label_space, ex.index)
        if not self.checksum:
            object.__setattr__(self, "checksum", content_checksum(self.examples))

    def __len__(self) -> int:
        return len(self.examples)

    def __getitem__(self, i):
        return self.examples[i]

    def labels(self) -> np.ndarray:
        dtype = int if isinstance(self.label_space, Categorical) else float
        return np.array([ex.label for ex in self.examples], dtype=dtype)


def _check_label(label, space: LabelSpace, index: int) -> None:
    if isinstance(space, Categorical):
        if isinstance(label, bool) or not isinstance(label, (int, np.integer)):
            raise DataError(f"example {index}: categorical label must be an int, got {label!r}")
        if not 0 <= label < space.num_classes:
            raise InvalidLabelError(f"example {index}: label {label} outside {space.num_classes} classes")
    else:
        if isinstance(label, bool) or not isinstance(label, (int, float, np.floating, np.integer)):
            raise DataError(f"example {index}: continuous label must be a number, got {label!r}")
        if not space.lo <= label <= space.hi:
            raise DataError(f"example {index}: label {label} outside [{space.lo}, {space.hi}]")


def example_to_dict(ex: Example, label_names: Sequence[str] | None = None) -> dict:
    d = {"tokens": list(ex.tokens), "label": label_names[ex.label] if label_names else ex.label}
    if ex.annotations:
        d["annotations"] = {k: list(v) for k, v in ex.annotations.items()}
    if ex.auxiliary:
        d["auxiliary"] = {k: list(v) for k, v in ex.auxiliary.items()}
    return d


def content_checksum(examples: Iterable[Example]) -> str:
    h = hashlib.sha256()
    for ex in examples:
        h.update(json.dumps(example_to_dict(ex), sort_keys=True).encode())
        h.update(b"\n")
    return h.hexdigest()


def dump_jsonl(dataset: Dataset, path) -> None:
    """Write ``dataset`` in the format ``load_jsonl`` reads."""
    with open(path, "w", encoding="utf-8") as f:
        header = {"label_space": dataset.label_space.to_dict()}
        if dataset.label_names:
            header["label_space"]["labels"] = list(dataset.label_names)
        f.write(json.dumps(header) + "\n")
        for ex in dataset.examples:
            f.write(json.dumps(example_to_dict(ex, dataset.label_names)) + "\n")


def load_jsonl(path, cap: int | None = DEFAULT_CAP, seed: int = 0, name: str | None = None) -> Dataset:
    """Read and validate a JSONL dataset.

    String labels are mapped to class indices by first appearance unless a
    header fixes the label list. When the file holds more than ``cap``
    examples, a seeded random subset of size ``cap`` is kept in file order.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"dataset file not found: {path}")
    raw = path.read_bytes()
    header = None
    rows = []
    for lineno, line in enumerate(raw.decode("utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise DataError(f"{path}:{lineno}: malformed JSON ({e.msg})") from None
        if not isinstance(obj, dict):
            raise DataError(f"{path}:{lineno}: expected a JSON object")
        if "label_space" in obj and not rows and header is None:
            header = obj["label_space"]
            continue
        rows.append((lineno, obj))

    space, label_names = _resolve_label_space(header, rows, path)
    name_to_index = {n: i for i, n in enumerate(label_names)} if label_names else None
    examples = []
    for i, (lineno, obj) in enumerate(rows):
        examples.append(_parse_row(obj, i, lineno, path, space, name_to_index))

    if cap is not None and len(examples) > cap:
        keep = np.sort(np.random.default_rng(seed).permutation(len(examples))[:cap])
        examples = [replace(examples[j], index=new) for new, j in enumerate(keep)]
    return Dataset(
        tuple(examples),
        space,
        name=name or path.stem,
        checksum=hashlib.sha256(raw).hexdigest(),
        label_names=tuple(label_names) if label_names else None,
    )


def _resolve_label_space(header, rows, path):
    if header is not None:
        try:
            space = label_space_from_dict(header)
        except (KeyError, TypeError, ValueError) as e:
            raise DataError(f"{path}: bad label_space header ({e})") from None
        names = header.get("labels")
        if names is not None and len(names) != getattr(space, "num_classes", -1):
            raise DataError(f"{path}: header lists {len(names)} labels for {space}")
        if names is None and isinstance(space, Categorical):
            if any(isinstance(obj.get("label"), str) for _, obj in rows):
                raise DataError(f"{path}: string labels need a 'labels' list in the header")
        return space, names

    labels = []
    for lineno, obj in rows:
        if "label" not in obj:
            raise DataError(f"{path}:{lineno}: missing 'label'")
        labels.append((lineno, obj["label"]))
    if any(isinstance(v, float) for _, v in labels):
        raise DataError(f"{path}: continuous labels need a label_space header line")
    names: list = []
    for lineno, v in labels:
        if not isinstance(v, (str, int)) or isinstance(v, bool):
            raise DataError(f"{path}:{lineno}: label must be a string or int, got {v!r}")
        if v not in names:
            names.append(v)
    if all(isinstance(v, int) for v in names):
        # integer labels are taken as indices already
        k = max(names) + 1 if names else 0
        if names and min(names) < 0:
            raise DataError(f"{path}: negative integer label")
        return Categorical(max(k, 2)), None
    if len(names) < 2:
        raise DataError(f"{path}: need at least 2 distinct labels, found {names}")
    return Categorical(len(names)), [str(n) for n in names]


def _parse_row(obj, i, lineno, path, space, name_to_index) -> Example:
    if "tokens" in obj:
        tokens = obj["tokens"]
        if not isinstance(tokens, list) or not all(isinstance(t, str) for t in tokens):
            raise DataError(f"{path}:{lineno}: 'tokens' must be a list of strings")
    elif "text" in obj:
        tokens = str(obj["text"]).split()
    else:
        raise DataError(f"{path}:{lineno}: missing 'tokens'")
    if "label" not in obj:
        raise DataError(f"{path}:{lineno}: missing 'label'")
    label = obj["label"]
    if name_to_index is not None:
        if label not in name_to_index:
            raise DataError(f"{path}:{lineno}: unknown label {label!r}")
        label = name_to_index[label]
    elif isinstance(space, BoundedContinuous) and isinstance(label, int) and not isinstance(label, bool):
        label = float(label)
    annotations = obj.get("annotations") or {}
    auxiliary = obj.get("auxiliary") or {}
    if not isinstance(annotations, dict) or not isinstance(auxiliary, dict):
        raise DataError(f"{path}:{lineno}: 'annotations' and 'auxiliary' must be objects")
    for fname, values in annotations.items():
        if not isinstance(values, list) or len(values) != len(tokens):
            n = len(values) if isinstance(values, list) else "non-list"
            raise DataError(
                f"{path}:{lineno}: annotation {fname!r} of example {i} has {n} entries "
                f"for {len(tokens)} tokens"
            )
    try:
        ex = Example(tuple(tokens), label, annotations, auxiliary, index=i)
        _check_label(ex.label, space, i)
    except DataError as e:
        raise DataError(f"{path}:{lineno}: {e}") from None
    return ex


def shuffle_order(n: int, seed: int) -> np.ndarray:
    """The seeded permutation used to order examples in a run."""
    return np.random.default_rng(seed).permutation(n)


def permutation_id(perm: np.ndarray) -> str:
    return hashlib.sha256(np.asarray(perm, dtype=np.int64).tobytes()).hexdigest()[:16]


def cap_dataset(dataset: Dataset, cap: int | None, seed: int = 0) -> Dataset:
    if cap is None or len(dataset) <= cap:
        return dataset
    keep = np.sort(np.random.default_rng(seed).permutation(len(dataset))[:cap])
    examples = tuple(replace(dataset.examples[j], index=new) for new, j in enumerate(keep))
    return Dataset(examples, dataset.label_space, dataset.name, "", dataset.label_names)
