"""Codelength arithmetic in bits.

Categorical labels are class indices ``0..K-1``; bounded-continuous labels are
reals in ``[lo, hi]`` and are charged ``-log2 pdf(y)`` (differential
codelength, so they can go negative for sharp densities).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ConfigError, InvalidLabelError, ZeroProbabilityError

DEFAULT_SMOOTHING = 1e-6
LN2 = math.log(2.0)


@dataclass(frozen=True)
class Categorical:
    num_classes: int

    def __post_init__(self):
        if int(self.num_classes) != self.num_classes or self.num_classes < 2:
            raise ConfigError(f"categorical label space needs K >= 2, got {self.num_classes}")

    def to_dict(self) -> dict:
        return {"kind": "categorical", "num_classes": self.num_classes}


@dataclass(frozen=True)
class BoundedContinuous:
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or self.hi - self.lo <= 0:
            raise ConfigError(f"continuous label space needs lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def to_dict(self) -> dict:
        return {"kind": "continuous", "lo": self.lo, "hi": self.hi}


LabelSpace = Union[Categorical, BoundedContinuous]


def label_space_from_dict(d: dict) -> LabelSpace:
    kind = d.get("kind")
    if kind == "categorical":
        return Categorical(int(d["num_classes"]))
    if kind == "continuous":
        return BoundedContinuous(float(d["lo"]), float(d["hi"]))
    raise ConfigError(f"unknown label space kind {kind!r}")


@dataclass(frozen=True)
class CategoricalDist:
    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or len(p) < 2:
            raise ConfigError("categorical distribution needs a vector of >= 2 probabilities")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
            raise ConfigError(f"probabilities must be non-negative and sum to 1, got {p}")
        object.__setattr__(self, "probs", p)


@dataclass(frozen=True)
class Gaussian:
    mean: float
    stddev: float

    def __post_init__(self):
        if not self.stddev > 0:
            raise ConfigError(f"Gaussian stddev must be > 0, got {self.stddev}")


@dataclass(frozen=True)
class UniformInterval:
    lo: float
    hi: float


PredictiveDistribution = Union[CategoricalDist, Gaussian, UniformInterval]


def categorical_bits(probs: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Per-example ``-log2 p(y)`` for a batch of categorical predictions."""
    probs = np.asarray(probs, dtype=float)
    labels = np.asarray(labels)
    n, k = probs.shape
    if labels.shape != (n,):
        raise InvalidLabelError(f"expected {n} labels, got shape {labels.shape}")
    if n and (labels.min() < 0 or labels.max() >= k or not np.issubdtype(labels.dtype, np.integer)):
        raise InvalidLabelError(f"labels must be class indices in [0, {k})")
    p = probs[np.arange(n), labels]
    if np.any(p <= 0):
        raise ZeroProbabilityError("zero probability assigned to an observed label; smooth first")
    return -np.log2(p)


def gaussian_bits(mean, stddev, labels) -> np.ndarray:
    mean = np.asarray(mean, dtype=float)
    y = np.asarray(labels, dtype=float)
    stddev = np.asarray(stddev, dtype=float)
    if np.any(stddev <= 0):
        raise ConfigError("Gaussian stddev must be > 0")
    z = (y - mean) / stddev
    return 0.5 * np.log2(2 * np.pi * stddev**2) + 0.5 * z * z / LN2


def codelength(dist: PredictiveDistribution, y) -> float:
    """Bits needed to send ``y`` under ``dist``."""
    if isinstance(dist, CategoricalDist):
        if isinstance(y, (bool, np.bool_)) or int(y) != y:
            raise InvalidLabelError(f"categorical label must be a class index, got {y!r}")
        if not 0 <= int(y) < len(dist.probs):
            raise InvalidLabelError(f"label {y} outside {len(dist.probs)} classes")
        return float(categorical_bits(dist.probs[None, :], np.array([int(y)]))[0])
    if isinstance(dist, Gaussian):
        return float(gaussian_bits(dist.mean, dist.stddev, y))
    if isinstance(dist, UniformInterval):
        if not dist.lo <= y <= dist.hi:
            raise InvalidLabelError(f"label {y} outside [{dist.lo}, {dist.hi}]")
        return math.log2(dist.hi - dist.lo)
    raise TypeError(f"not a predictive distribution: {dist!r}")


def uniform_prior(space: LabelSpace) -> PredictiveDistribution:
    if isinstance(space, Categorical):
        k = space.num_classes
        return CategoricalDist(np.full(k, 1.0 / k))
    return UniformInterval(space.lo, space.hi)


def uniform_bits(space: LabelSpace) -> float:
    """Per-label codelength under the uniform prior (exact ``log2``)."""
    if isinstance(space, Categorical):
        return math.log2(space.num_classes)
    return math.log2(space.width)


def _check_smoothing(lam: float) -> None:
    if not 0 < lam < 1:
        raise ConfigError(f"smoothing must lie in (0, 1), got {lam}")


def smooth_probs(probs: np.ndarray, lam: float = DEFAULT_SMOOTHING) -> np.ndarray:
    """Mix with the uniform distribution: ``(1 - lam) * p + lam / K`` row-wise."""
    _check_smoothing(lam)
    probs = np.asarray(probs, dtype=float)
    return (1.0 - lam) * probs + lam / probs.shape[-1]


def smooth(dist: CategoricalDist, lam: float = DEFAULT_SMOOTHING) -> CategoricalDist:
    return CategoricalDist(smooth_probs(dist.probs, lam))


def _check_temperature(t) -> None:
    if not np.all(np.asarray(t) > 0):
        raise ConfigError(f"temperature must be > 0, got {t}")


def temper_probs(probs: np.ndarray, temperature: float) -> np.ndarray:
    """Row-wise ``p ** (1/T)`` renormalised, computed in log space."""
    _check_temperature(temperature)
    probs = np.asarray(probs, dtype=float)
    if temperature == 1.0:
        return probs.copy()
    if np.any(probs <= 0):
        raise ZeroProbabilityError("temperature scaling needs strictly positive probabilities")
    z = np.log(probs) / temperature
    z -= z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def apply_temperature(dist: CategoricalDist, temperature: float) -> CategoricalDist:
    return CategoricalDist(temper_probs(dist.probs, temperature))


def temperature_grid(num: int = 1000, lo: float = 1e-1, hi: float = 1e2) -> np.ndarray:
    """Log-uniform temperatures with ``T = 1`` always included."""
    grid = np.logspace(np.log10(lo), np.log10(hi), num)
    return np.unique(np.append(grid, 1.0))


def stddev_grid(num: int = 1000, lo: float = 10**-2.5, hi: float = 10**1.5) -> np.ndarray:
    return np.logspace(np.log10(lo), np.log10(hi), num)


def tempered_bits_grid(probs: np.ndarray, labels: np.ndarray, temps: np.ndarray) -> np.ndarray:
    """Total bits of ``labels`` for each temperature in ``temps``.

    The ``T == 1`` entry is computed directly from ``probs`` so it agrees with
    the uncalibrated codelength.
    """
    probs = np.asarray(probs, dtype=float)
    labels = np.asarray(labels)
    _check_temperature(temps)
    if np.any(probs <= 0):
        raise ZeroProbabilityError("temperature scaling needs strictly positive probabilities")
    logp = np.log(probs)
    n = len(labels)
    out = np.empty(len(temps))
    base = float(categorical_bits(probs, labels).sum())
    for i, t in enumerate(temps):
        if t == 1.0:
            out[i] = base
            continue
        z = logp / t
        m = z.max(axis=1, keepdims=True)
        lse = (m + np.log(np.exp(z - m).sum(axis=1, keepdims=True)))[:, 0]
        out[i] = float(np.sum(lse - z[np.arange(n), labels])) / LN2
    return out
