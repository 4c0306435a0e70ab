"""The learner roster: label prior, naive Bayes, logistic regression, one-hidden-layer MLP.

Every learner fits on a prefix of the (ordered) data, holding out a seeded 10%
dev split for hyperparameter choice, early stopping and calibration, and
predicts a distribution over the label space for unseen examples.
"""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .codelength import (
    DEFAULT_SMOOTHING,
    LN2,
    BoundedContinuous,
    Categorical,
    CategoricalDist,
    Gaussian,
    LabelSpace,
    categorical_bits,
    gaussian_bits,
    smooth_probs,
    stddev_grid,
    temper_probs,
    temperature_grid,
    tempered_bits_grid,
)
from .data import Example
from .errors import ConfigError, TooSmallPrefixError
from .features import ColumnMap, FeatureConfig, featurize
from .rng import derive_seed

KINDS = ("prior", "naive_bayes", "logistic", "mlp")
MIN_PREFIX = 10
DEV_FRACTION = 0.1

_TEMPERATURES = temperature_grid()
_STDDEVS = stddev_grid()


@dataclass(frozen=True)
class Discretization:
    step: float
    lo: float
    hi: float

    def __post_init__(self):
        if not self.hi > self.lo:
            raise ConfigError(f"discretization needs lo < hi, got [{self.lo}, {self.hi}]")
        if not 0 < self.step <= self.hi - self.lo:
            raise ConfigError(f"discretization step must lie in (0, hi - lo], got {self.step}")

    @property
    def num_classes(self) -> int:
        return math.floor((self.hi - self.lo) / self.step + 1e-9) + 1

    @property
    def values(self) -> np.ndarray:
        return self.lo + self.step * np.arange(self.num_classes)

    def to_class(self, y) -> np.ndarray:
        idx = np.floor((np.asarray(y, dtype=float) - self.lo) / self.step + 0.5).astype(int)
        return np.clip(idx, 0, self.num_classes - 1)


DEFAULT_GRIDS = {
    "prior": {},
    "naive_bayes": {"alpha": (0.01, 0.1, 1.0)},
    "logistic": {"lr": (0.01, 0.1), "l2": (1e-5, 1e-3)},
    "mlp": {"width": (16, 64), "lr": (0.01,), "l2": (1e-5,)},
}

DEFAULT_FEATURES = {
    "prior": FeatureConfig(ngram=1),
    "naive_bayes": FeatureConfig(ngram=1, binary=True),
    "logistic": FeatureConfig(),
    "mlp": FeatureConfig(dim=2**12, ngram=1),
}


@dataclass(frozen=True)
class LearnerSpec:
    name: str
    kind: str
    grid: tuple = ()
    features: FeatureConfig = FeatureConfig()
    calibrate: bool = True
    max_epochs: int = 20
    patience: int = 1
    batch_size: int = 32
    smoothing: float = DEFAULT_SMOOTHING
    discretize: Discretization | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown learner kind {self.kind!r}; expected one of {KINDS}")
        grid = self.grid
        if isinstance(grid, dict):
            grid = tuple(sorted((k, tuple(v)) for k, v in grid.items()))
        object.__setattr__(self, "grid", grid)
        for key, values in grid:
            if not values:
                raise ConfigError(f"{self.name}: empty grid for {key!r}")
        if not 0 < self.smoothing < 1:
            raise ConfigError(f"{self.name}: smoothing must lie in (0, 1)")
        if self.max_epochs < 1 or self.patience < 1 or self.batch_size < 1:
            raise ConfigError(f"{self.name}: max_epochs, patience and batch_size must be >= 1")
        for point in self.grid_points():
            _check_point(self.kind, point, self.name)

    def grid_points(self) -> list[dict]:
        keys = [k for k, _ in self.grid]
        return [dict(zip(keys, combo)) for combo in itertools.product(*(v for _, v in self.grid))]

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "kind": self.kind,
            "grid": {k: list(v) for k, v in self.grid},
            "features": self.features.to_dict(),
            "calibrate": self.calibrate,
            "max_epochs": self.max_epochs,
            "patience": self.patience,
            "batch_size": self.batch_size,
            "smoothing": self.smoothing,
        }
        if self.discretize:
            d["discretize"] = {"step": self.discretize.step, "lo": self.discretize.lo,
                               "hi": self.discretize.hi}
        return d


def _check_point(kind: str, point: dict, name: str) -> None:
    allowed = set(DEFAULT_GRIDS[kind])
    extra = set(point) - allowed
    if extra:
        raise ConfigError(f"{name}: unknown hyperparameters {sorted(extra)} for {kind}")
    if kind == "naive_bayes" and not point.get("alpha", 1.0) > 0:
        raise ConfigError(f"{name}: naive Bayes alpha must be > 0")
    if kind in ("logistic", "mlp"):
        if not point.get("lr", 0.01) > 0:
            raise ConfigError(f"{name}: learning rate must be > 0")
        if point.get("l2", 0.0) < 0:
            raise ConfigError(f"{name}: l2 must be >= 0")
    if kind == "mlp" and int(point.get("width", 16)) < 1:
        raise ConfigError(f"{name}: MLP needs at least one hidden unit")


def make_spec(kind: str, name: str | None = None, grid: dict | None = None,
              features: FeatureConfig | dict | None = None, **kwargs) -> LearnerSpec:
    """A learner spec with the default grid and features for ``kind``."""
    if kind not in KINDS:
        raise ConfigError(f"unknown learner kind {kind!r}; expected one of {KINDS}")
    if isinstance(features, dict):
        features = replace(DEFAULT_FEATURES[kind], **features)
    return LearnerSpec(
        name=name or kind,
        kind=kind,
        grid=DEFAULT_GRIDS[kind] if grid is None else grid,
        features=features or DEFAULT_FEATURES[kind],
        **kwargs,
    )


def discretize_regression_adapter(inner: LearnerSpec, step: float = 0.2, lo: float = 0.0,
                                  hi: float = 5.0) -> LearnerSpec:
    """Turn a categorical learner into a regressor over rounded label bins.

    The wrapped learner classifies into bins ``lo, lo + step, ...``; its
    prediction is a Gaussian centred on the expected bin value with a
    dev-tuned standard deviation.
    """
    return replace(inner, discretize=Discretization(step, lo, hi))


@dataclass(frozen=True)
class FitReport:
    hparams: dict
    dev_bits: float
    dev_bits_uncalibrated: float
    temperature: float
    stddev: float | None
    epochs: int
    n_train: int
    n_dev: int
    wall_time: float = field(default=0.0, compare=False)

    def to_dict(self) -> dict:
        return {
            "hparams": self.hparams,
            "dev_bits": self.dev_bits,
            "dev_bits_uncalibrated": self.dev_bits_uncalibrated,
            "temperature": self.temperature,
            "stddev": self.stddev,
            "epochs": self.epochs,
            "n_train": self.n_train,
            "n_dev": self.n_dev,
        }


@dataclass(frozen=True)
class PredictiveModel:
    kind: str
    params: dict
    label_space: LabelSpace
    features: FeatureConfig
    smoothing: float
    columns: ColumnMap | None = None
    temperature: float = 1.0
    stddev: float | None = None
    discretize: Discretization | None = None


@dataclass(frozen=True)
class CategoricalBatch:
    probs: np.ndarray

    def bits(self, labels) -> np.ndarray:
        return categorical_bits(self.probs, np.asarray(labels, dtype=int))

    def __getitem__(self, i) -> CategoricalDist:
        return CategoricalDist(self.probs[i])


@dataclass(frozen=True)
class GaussianBatch:
    mean: np.ndarray
    stddev: float

    def bits(self, labels) -> np.ndarray:
        return gaussian_bits(self.mean, self.stddev, labels)

    def __getitem__(self, i) -> Gaussian:
        return Gaussian(float(self.mean[i]), self.stddev)


# ---------------------------------------------------------------------------
# splitting


def train_dev_split(labels: np.ndarray, seed: int, num_classes: int | None = None):
    """Seeded 90/10 split of prefix positions; both parts sorted.

    Stratified by label when ``num_classes`` is given and every class has at
    least 10 examples.
    """
    labels = np.asarray(labels)
    n = len(labels)
    perm = np.random.default_rng(seed).permutation(n)
    counts = np.bincount(labels, minlength=num_classes) if num_classes else None
    if counts is not None and len(counts) == num_classes and counts.min() >= 10:
        dev = []
        for c in range(num_classes):
            members = perm[labels[perm] == c]
            dev.extend(members[: max(1, int(round(DEV_FRACTION * len(members))))])
        dev = np.array(dev)
    else:
        dev = perm[: max(1, int(round(DEV_FRACTION * n)))]
    mask = np.zeros(n, bool)
    mask[dev] = True
    return np.flatnonzero(~mask), np.flatnonzero(mask)


# ---------------------------------------------------------------------------
# parametric models


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _log_softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def forward(kind: str, params: dict, X) -> np.ndarray:
    """Logits for a batch."""
    if kind == "logistic":
        return np.asarray(X @ params["W"]) + params["b"]
    if kind == "mlp":
        h = np.tanh(np.asarray(X @ params["W1"]) + params["b1"])
        return h @ params["W2"] + params["b2"]
    if kind == "naive_bayes":
        return np.asarray(X @ params["log_theta"]) + params["log_prior"]
    raise ConfigError(f"no forward pass for {kind}")


def loss_and_grad(kind: str, params: dict, X, y: np.ndarray, l2: float = 0.0):
    """Mean cross-entropy (nats) plus ``l2/2 * ||weights||^2`` and its gradient."""
    n = X.shape[0]
    if kind == "logistic":
        logits = np.asarray(X @ params["W"]) + params["b"]
    elif kind == "mlp":
        h = np.tanh(np.asarray(X @ params["W1"]) + params["b1"])
        logits = h @ params["W2"] + params["b2"]
    else:
        raise ConfigError(f"{kind} is not trained by gradient descent")
    logp = _log_softmax(logits)
    loss = -logp[np.arange(n), y].mean()
    g = np.exp(logp)
    g[np.arange(n), y] -= 1.0
    g /= n
    weights = ("W",) if kind == "logistic" else ("W1", "W2")
    loss += 0.5 * l2 * sum(float(np.sum(params[w] ** 2)) for w in weights)
    if kind == "logistic":
        grads = {"W": np.asarray(X.T @ g) + l2 * params["W"], "b": g.sum(axis=0)}
    else:
        dh = (g @ params["W2"].T) * (1.0 - h * h)
        grads = {
            "W1": np.asarray(X.T @ dh) + l2 * params["W1"],
            "b1": dh.sum(axis=0),
            "W2": h.T @ g + l2 * params["W2"],
            "b2": g.sum(axis=0),
        }
    return float(loss), grads


def init_params(kind: str, n_features: int, num_classes: int, hp: dict, rng, mean_nnz: float = 1.0) -> dict:
    if kind == "logistic":
        return {"W": np.zeros((n_features, num_classes)), "b": np.zeros(num_classes)}
    width = int(hp.get("width", 16))
    return {
        "W1": rng.normal(0.0, 1.0 / math.sqrt(max(mean_nnz, 1.0)), size=(n_features, width)),
        "b1": np.zeros(width),
        "W2": rng.normal(0.0, 1.0 / math.sqrt(width), size=(width, num_classes)),
        "b2": np.zeros(num_classes),
    }


def _train_sgd(spec: LearnerSpec, hp: dict, Xtr, ytr, Xdev, ydev, num_classes: int, seed: int):
    """Adam on minibatches; keep the epoch with the lowest dev codelength."""
    rng = np.random.default_rng(seed)
    mean_nnz = Xtr.nnz / max(Xtr.shape[0], 1)
    params = init_params(spec.kind, Xtr.shape[1], num_classes, hp, rng, mean_nnz)
    lr, l2 = float(hp.get("lr", 0.01)), float(hp.get("l2", 0.0))
    b1, b2, eps = 0.9, 0.999, 1e-8
    m = {k: np.zeros_like(v) for k, v in params.items()}
    v = {k: np.zeros_like(v) for k, v in params.items()}
    step = 0
    best = {k: a.copy() for k, a in params.items()}
    best_bits = _dev_bits(spec, params, Xdev, ydev)
    since_best = 0
    epochs = 0
    n = Xtr.shape[0]
    for _ in range(spec.max_epochs):
        epochs += 1
        order = rng.permutation(n)
        for start in range(0, n, spec.batch_size):
            idx = order[start:start + spec.batch_size]
            _, grads = loss_and_grad(spec.kind, params, Xtr[idx], ytr[idx], l2)
            step += 1
            for k in params:
                m[k] = b1 * m[k] + (1 - b1) * grads[k]
                v[k] = b2 * v[k] + (1 - b2) * grads[k] ** 2
                mhat = m[k] / (1 - b1**step)
                vhat = v[k] / (1 - b2**step)
                params[k] = params[k] - lr * mhat / (np.sqrt(vhat) + eps)
        bits = _dev_bits(spec, params, Xdev, ydev)
        if bits < best_bits:
            best_bits, since_best = bits, 0
            best = {k: a.copy() for k, a in params.items()}
        else:
            since_best += 1
            if since_best >= spec.patience:
                break
    return best, epochs


def _dev_bits(spec: LearnerSpec, params: dict, Xdev, ydev) -> float:
    probs = smooth_probs(_softmax(forward(spec.kind, params, Xdev)), spec.smoothing)
    return float(categorical_bits(probs, ydev).sum())


def _train_naive_bayes(hp: dict, Xtr, ytr, num_classes: int) -> dict:
    alpha = float(hp.get("alpha", 1.0))
    Y = np.zeros((len(ytr), num_classes))
    Y[np.arange(len(ytr)), ytr] = 1.0
    counts = np.asarray(Xtr.T @ Y)
    log_theta = np.log(counts + alpha) - np.log(counts.sum(axis=0) + alpha * Xtr.shape[1])
    class_counts = Y.sum(axis=0)
    log_prior = np.log(class_counts + 1.0) - np.log(len(ytr) + num_classes)
    return {"log_theta": log_theta, "log_prior": log_prior}


def _laplace(y: np.ndarray, num_classes: int) -> np.ndarray:
    counts = np.bincount(y, minlength=num_classes).astype(float)
    return (counts + 1.0) / (len(y) + num_classes)


# ---------------------------------------------------------------------------
# calibration


def calibrate_temperature(probs: np.ndarray, labels: np.ndarray, enabled: bool = True):
    """Pick the temperature minimising total dev bits.

    Returns ``(T, bits_at_T, bits_at_1)``; ``T = 1`` is on the grid, so the
    calibrated codelength never exceeds the uncalibrated one.
    """
    if not enabled:
        bits = float(categorical_bits(probs, labels).sum())
        return 1.0, bits, bits
    totals = tempered_bits_grid(probs, labels, _TEMPERATURES)
    i = int(np.argmin(totals))
    one = int(np.flatnonzero(_TEMPERATURES == 1.0)[0])
    return float(_TEMPERATURES[i]), float(totals[i]), float(totals[one])


def tune_stddev(means: np.ndarray, y: np.ndarray):
    """Shared Gaussian stddev minimising total bits; returns ``(stddev, bits)``."""
    means = np.asarray(means, dtype=float)
    y = np.asarray(y, dtype=float)
    sq = float(np.sum((y - means) ** 2))
    n = len(y)
    s = _STDDEVS
    totals = n * 0.5 * np.log2(2 * np.pi * s**2) + sq / (2 * s**2 * LN2)
    i = int(np.argmin(totals))
    return float(s[i]), float(totals[i])


# ---------------------------------------------------------------------------
# fit / predict


def _check_compatible(spec: LearnerSpec, space: LabelSpace) -> None:
    if isinstance(space, BoundedContinuous):
        if spec.kind != "prior" and spec.discretize is None:
            raise ConfigError(f"{spec.name}: {spec.kind} needs a discretization adapter for continuous labels")
    elif spec.discretize is not None:
        raise ConfigError(f"{spec.name}: discretization adapter requires a continuous label space")


def fit(spec: LearnerSpec, prefix: Sequence[Example], space: LabelSpace, seed: int,
        fixed_hparams: dict | None = None, features=None):
    """Fit ``spec`` on ``prefix``; returns ``(PredictiveModel, FitReport)``.

    ``features`` may carry ``featurize(prefix tokens, spec.features)``
    precomputed; results are identical either way.
    """
    t0 = time.perf_counter()
    if not prefix:
        raise TooSmallPrefixError("cannot fit on an empty prefix")
    _check_compatible(spec, space)
    all_points = spec.grid_points()
    points = all_points
    if fixed_hparams is not None:
        if dict(fixed_hparams) not in points:
            raise ConfigError(f"{spec.name}: fixed hyperparameters {fixed_hparams} not in grid")
        points = [dict(fixed_hparams)]

    if spec.kind == "prior":
        model, report = _fit_prior(spec, prefix, space)
        return model, replace(report, wall_time=time.perf_counter() - t0)

    if len(prefix) < MIN_PREFIX:
        raise TooSmallPrefixError(
            f"{spec.name}: prefix of {len(prefix)} examples is below the minimum of {MIN_PREFIX}"
        )

    y_raw = np.array([ex.label for ex in prefix])
    disc = spec.discretize
    if disc is not None:
        y = disc.to_class(y_raw)
        K = disc.num_classes
    else:
        y = y_raw.astype(int)
        K = space.num_classes
    train, dev = train_dev_split(y, derive_seed(seed, 0), K if disc is None else None)

    if len(np.unique(y[train])) < 2:
        # one class in the training split: nothing to discriminate
        probs = np.tile(_laplace(y[train], K), (len(dev), 1))
        model = PredictiveModel("prior", {"probs": _laplace(y[train], K)}, space, spec.features,
                                spec.smoothing, discretize=disc)
        model, report = _finish(spec, model, probs, y, y_raw, dev, {}, 0, len(train))
        return model, replace(report, hparams=points[0], wall_time=time.perf_counter() - t0)

    X = features if features is not None else featurize([ex.tokens for ex in prefix], spec.features)
    cmap = ColumnMap(X[train])
    Xtr, Xdev = cmap.transform(X[train]), cmap.transform(X[dev])
    best = None
    for hp in points:
        j = all_points.index(hp)  # seed follows the grid point, not its position in this sweep
        if spec.kind == "naive_bayes":
            params, epochs = _train_naive_bayes(hp, Xtr, y[train], K), 0
        else:
            params, epochs = _train_sgd(spec, hp, Xtr, y[train], Xdev, y[dev], K, derive_seed(seed, 1, j))
        probs = _softmax(forward(spec.kind, params, Xdev))
        model = PredictiveModel(spec.kind, params, space, spec.features, spec.smoothing,
                                columns=cmap, discretize=disc)
        model, report = _finish(spec, model, probs, y, y_raw, dev, hp, epochs, len(train))
        if best is None or report.dev_bits < best[1].dev_bits:
            best = (model, report)
    model, report = best
    return model, replace(report, wall_time=time.perf_counter() - t0)


def _finish(spec, model, raw_dev_probs, y, y_raw, dev, hp, epochs, n_train):
    """Calibrate a trained model on the dev split and build its report."""
    probs = smooth_probs(raw_dev_probs, spec.smoothing)
    stddev = None
    if model.discretize is not None:
        T, stddev, bits, bits_1 = calibrate_discretized(probs, model.discretize.values, y_raw[dev],
                                                         spec.calibrate)
    else:
        T, bits, bits_1 = calibrate_temperature(probs, y[dev], spec.calibrate)
    model = replace(model, temperature=T, stddev=stddev)
    n_dev = len(dev)
    report = FitReport(hp, bits / n_dev, bits_1 / n_dev, T, stddev, epochs, n_train, n_dev)
    return model, report


def calibrate_discretized(probs: np.ndarray, values: np.ndarray, y: np.ndarray, enabled: bool = True):
    """Joint temperature / stddev choice for the binned regressor.

    Returns ``(T, stddev, bits_at_T, bits_at_1)`` where bits are Gaussian dev
    codelengths with the stddev re-tuned for each temperature.
    """
    temps = _TEMPERATURES if enabled else np.array([1.0])
    best = None
    bits_1 = None
    for t in temps:
        s, bits = tune_stddev(temper_probs(probs, float(t)) @ values, y)
        if t == 1.0:
            bits_1 = bits
        if best is None or bits < best[2]:
            best = (float(t), s, bits)
    return best[0], best[1], best[2], bits_1


def _fit_prior(spec: LearnerSpec, prefix, space):
    """Label prior on the whole prefix; there is nothing to tune on a dev split."""
    y = np.array([ex.label for ex in prefix])
    n = len(y)
    if isinstance(space, Categorical):
        probs = _laplace(y.astype(int), space.num_classes)
        model = PredictiveModel("prior", {"probs": probs}, space, spec.features, spec.smoothing)
        bits = float(categorical_bits(smooth_probs(np.tile(probs, (n, 1)), spec.smoothing), y.astype(int)).sum())
        return model, FitReport({}, bits / n, bits / n, 1.0, None, 0, n, 0)
    mean = float(y.mean())
    stddev, bits = tune_stddev(np.full(n, mean), y)
    model = PredictiveModel("prior", {"mean": mean}, space, spec.features, spec.smoothing, stddev=stddev)
    return model, FitReport({}, bits / n, bits / n, 1.0, stddev, 0, n, 0)


def predict_batch(model: PredictiveModel, examples: Sequence[Example], features=None):
    """Predictions for many examples: a ``CategoricalBatch`` or ``GaussianBatch``."""
    n = len(examples)
    if model.kind == "prior" and "mean" in model.params:
        return GaussianBatch(np.full(n, model.params["mean"]), model.stddev)
    if model.kind == "prior":
        raw = np.tile(model.params["probs"], (n, 1))
    else:
        if features is None:
            features = featurize([ex.tokens for ex in examples], model.features)
        X = model.columns.transform(features)
        raw = _softmax(forward(model.kind, model.params, X))
    probs = temper_probs(smooth_probs(raw, model.smoothing), model.temperature)
    if model.discretize is not None:
        return GaussianBatch(probs @ model.discretize.values, model.stddev)
    return CategoricalBatch(probs)


def predict(model: PredictiveModel, example: Example):
    return predict_batch(model, [example])[0]
