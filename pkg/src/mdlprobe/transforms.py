"""Input rewrites ("capabilities") applied before coding a condition.

A transform is a kind plus parameters. ``apply`` is a pure function of the
transform, the example and the run seed; randomised kinds draw from a
sub-seed of ``(seed, example.index)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

from .data import Example
from .errors import AnnotationMissingError, ConfigError, NotApplicableError
from .rng import make_rng

MASK = "_"
RATIONALE = "*"

KINDS = (
    "identity",
    "append_auxiliary",
    "mask_by_wordlist",
    "mask_by_tag",
    "mask_random",
    "shuffle_tokens",
    "length_only",
    "keep_marked_only",
    "mask_marked",
    "pattern_only",
    "surround_marked",
    "duplicate_tokens",
)
MASKING_KINDS = ("mask_by_wordlist", "mask_by_tag", "mask_random", "keep_marked_only", "mask_marked")

_DEFAULTS: dict[str, dict[str, Any]] = {
    "identity": {},
    "append_auxiliary": {"field": None, "marker": ">"},
    "mask_by_wordlist": {"words": None},
    "mask_by_tag": {"tags": None, "field": "pos"},
    "mask_random": {"rate": None, "match": None},
    "shuffle_tokens": {},
    "length_only": {},
    "keep_marked_only": {"field": "rationale"},
    "mask_marked": {"field": "rationale"},
    "pattern_only": {"field": "rationale"},
    "surround_marked": {"field": "rationale"},
    "duplicate_tokens": {},
}


@dataclass(frozen=True)
class Transform:
    kind: str
    params: tuple = field(default=())

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown transform kind {self.kind!r}")
        params = dict(self.params)
        unknown = set(params) - set(_DEFAULTS[self.kind])
        if unknown:
            raise ConfigError(f"{self.kind}: unknown parameters {sorted(unknown)}")
        merged = {**_DEFAULTS[self.kind], **params}
        if self.kind == "append_auxiliary" and not merged["field"]:
            raise ConfigError("append_auxiliary needs a 'field'")
        if self.kind == "mask_by_wordlist":
            if merged["words"] is None:
                raise ConfigError("mask_by_wordlist needs 'words'")
            merged["words"] = frozenset(merged["words"])
        if self.kind == "mask_by_tag":
            if merged["tags"] is None:
                raise ConfigError("mask_by_tag needs 'tags'")
            merged["tags"] = frozenset(merged["tags"])
        if self.kind == "mask_random":
            rate, match = merged["rate"], merged["match"]
            if (rate is None) == (match is None):
                raise ConfigError("mask_random needs exactly one of 'rate' or 'match'")
            if rate is not None and not 0 <= rate <= 1:
                raise ConfigError(f"mask rate must lie in [0, 1], got {rate}")
            if match is not None and match.kind not in MASKING_KINDS:
                raise NotApplicableError(f"cannot match the mask rate of a {match.kind} transform")
        object.__setattr__(self, "params", tuple(sorted(merged.items())))

    def __getitem__(self, key):
        return dict(self.params)[key]

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        for k, v in self.params:
            if isinstance(v, frozenset):
                v = sorted(v)
            elif isinstance(v, Transform):
                v = v.to_dict()
            if v is not None:
                out[k] = v
        return out


def transform_from_dict(d: dict) -> Transform:
    d = dict(d)
    kind = d.pop("kind", None)
    if kind is None:
        raise ConfigError("transform needs a 'kind'")
    if isinstance(d.get("match"), dict):
        d["match"] = transform_from_dict(d["match"])
    return Transform(kind, tuple(d.items()))


def _marks(example: Example, name: str) -> tuple:
    if name not in example.annotations:
        raise AnnotationMissingError(f"example {example.index}: missing annotation {name!r}")
    return example.annotations[name]


def apply(t: Transform, example: Example, seed: int = 0) -> Example:
    """Rewrite ``example`` under ``t``; the label is never touched."""
    kind, p = t.kind, dict(t.params)
    toks = example.tokens
    if kind == "identity":
        return example
    if kind == "append_auxiliary":
        name = p["field"]
        if name not in example.auxiliary:
            raise AnnotationMissingError(f"example {example.index}: missing auxiliary field {name!r}")
        extra = [p["marker"] + a for a in example.auxiliary[name]]
        return example.with_tokens(toks + tuple(extra))
    if kind == "mask_by_wordlist":
        words = p["words"]
        return _masked(example, [tok in words for tok in toks])
    if kind == "mask_by_tag":
        tags = p["tags"]
        return _masked(example, [tag in tags for tag in _marks(example, p["field"])])
    if kind == "mask_random":
        if p["match"] is not None:
            count = masked_count(p["match"], example, seed)
        else:
            count = math.floor(p["rate"] * len(toks) + 0.5)
        chosen = set(make_rng(seed, example.index).choice(len(toks), size=count, replace=False).tolist()) if count else set()
        return _masked(example, [i in chosen for i in range(len(toks))])
    if kind == "shuffle_tokens":
        perm = make_rng(seed, example.index).permutation(len(toks))
        return example.with_tokens(tuple(toks[i] for i in perm))
    if kind == "length_only":
        return example.with_tokens((f"len={len(toks)}",))
    if kind == "keep_marked_only":
        return _masked(example, [not m for m in _marks(example, p["field"])])
    if kind == "mask_marked":
        return _masked(example, [bool(m) for m in _marks(example, p["field"])])
    if kind == "pattern_only":
        marks = _marks(example, p["field"])
        return example.with_tokens(tuple(RATIONALE if m else MASK for m in marks))
    if kind == "surround_marked":
        marks = _marks(example, p["field"])
        out = []
        for tok, m in zip(toks, marks):
            out.extend((RATIONALE, tok, RATIONALE) if m else (tok,))
        return example.with_tokens(tuple(out))
    if kind == "duplicate_tokens":
        return example.with_tokens(toks + toks)
    raise ConfigError(f"unhandled transform kind {kind!r}")


def _masked(example: Example, flags) -> Example:
    toks = tuple(MASK if f else tok for tok, f in zip(example.tokens, flags))
    # positions are preserved, so per-token annotations stay aligned
    return example.with_tokens(toks, dict(example.annotations))


def masked_count(t: Transform, example: Example, seed: int = 0) -> int:
    """Number of tokens ``t`` turns into the mask token on ``example``."""
    if t.kind not in MASKING_KINDS:
        raise NotApplicableError(f"{t.kind} is not a masking transform")
    out = apply(t, example, seed)
    return sum(1 for a, b in zip(example.tokens, out.tokens) if b == MASK and a != MASK)


def matched_control_for(t: Transform) -> Transform:
    """Random mask hitting the same number of tokens per example as ``t``."""
    if t.kind not in MASKING_KINDS:
        raise NotApplicableError(f"no matched random control for a {t.kind} transform")
    return Transform("mask_random", (("match", t),))


def apply_all(t: Transform, examples, seed: int = 0) -> list[Example]:
    return [apply(t, ex, seed) for ex in examples]
