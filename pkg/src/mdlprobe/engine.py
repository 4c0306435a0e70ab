"""Block-wise prequential coding of one condition, and paired comparison of two."""
from __future__ import annotations

import math
import statistics
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import learners
from .codelength import uniform_bits
from .data import Dataset, Example, permutation_id, shuffle_order
from .features import featurize
from .errors import ConfigError, IncomparableResultsError, InternalError
from .learners import LearnerSpec
from .rng import derive_seed
from .schedule import BlockSchedule, make_schedule
from .transforms import Transform, apply_all


@dataclass(frozen=True)
class BlockCodelength:
    index: int
    start: int
    end: int
    model_bits: tuple[float, ...]  # empty for block 0
    chosen: int | None  # None: uniform prior
    bits: float
    fits: tuple[dict, ...] = ()

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "start": self.start,
            "end": self.end,
            "model_bits": list(self.model_bits),
            "chosen": self.chosen,
            "bits": self.bits,
            "fits": list(self.fits),
        }


@dataclass(frozen=True)
class SeedRun:
    seed: int
    permutation_id: str
    blocks: tuple[BlockCodelength, ...]
    overhead_bits: float
    total_bits: float

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "permutation_id": self.permutation_id,
            "overhead_bits": self.overhead_bits,
            "total_bits": self.total_bits,
            "blocks": [b.to_dict() for b in self.blocks],
        }


@dataclass(frozen=True)
class ConditionResult:
    name: str
    cuts: tuple[int, ...]
    roster: tuple[str, ...]
    runs: tuple[SeedRun, ...]
    mdl_mean: float
    mdl_stderr: float | None
    block_mean_bits: tuple[float, ...]

    @property
    def seeds(self) -> tuple[int, ...]:
        return tuple(r.seed for r in self.runs)

    @property
    def totals(self) -> tuple[float, ...]:
        return tuple(r.total_bits for r in self.runs)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "cuts": list(self.cuts),
            "roster": list(self.roster),
            "mdl_mean": self.mdl_mean,
            "mdl_stderr": self.mdl_stderr,
            "block_mean_bits": list(self.block_mean_bits),
            "runs": [r.to_dict() for r in self.runs],
        }


@dataclass(frozen=True)
class DeltaReport:
    a: str
    b: str
    deltas: tuple[float, ...]
    delta_mean: float
    delta_stderr: float | None
    verdict: str

    def to_dict(self) -> dict:
        return {
            "a": self.a,
            "b": self.b,
            "deltas": list(self.deltas),
            "delta_mean": self.delta_mean,
            "delta_stderr": self.delta_stderr,
            "verdict": self.verdict,
        }


def ensemble_overhead(num_blocks: int, num_models: int) -> float:
    """Bits to name the chosen model for every block after the first."""
    if num_models <= 1:
        return 0.0
    return (num_blocks - 1) * math.log2(num_models)


def stderr(values: Sequence[float]) -> float | None:
    if len(values) < 2:
        return None
    return statistics.stdev(values) / math.sqrt(len(values))


# ---------------------------------------------------------------------------


def learner_seed(seed: int, block: int, spec: LearnerSpec) -> int:
    """Sub-seed for one fit; keyed by learner name so it does not depend on roster order."""
    return derive_seed(seed, block, zlib.crc32(spec.name.encode()))


def _fit_block(spec: LearnerSpec, prefix, block, space, seed: int, fixed, X_prefix=None, X_block=None):
    """Fit one learner on a prefix and code one block; top-level for pickling."""
    model, report = learners.fit(spec, prefix, space, seed, fixed, features=X_prefix)
    bits = learners.predict_batch(model, block, features=X_block).bits([ex.label for ex in block])
    return np.asarray(bits, dtype=float), report


def _ordered_examples(dataset: Dataset, transform: Transform, seed: int):
    perm = shuffle_order(len(dataset), seed)
    transformed = apply_all(transform, dataset.examples, seed)
    return [transformed[i] for i in perm], permutation_id(perm)


def run_condition(dataset: Dataset, transform: Transform, roster: Sequence[LearnerSpec],
                  seeds: Sequence[int], schedule: BlockSchedule | None = None,
                  num_blocks: int = 9, first_block: int = 64, name: str = "condition",
                  jobs: int = 1) -> ConditionResult:
    """Block-wise MDL of ``dataset`` under ``transform`` for every seed.

    The first seed sweeps each learner's grid; later seeds reuse the winning
    hyperparameters for the same learner and block.
    """
    if len(dataset) == 0:
        raise ConfigError("dataset is empty")
    if not roster:
        raise ConfigError("roster needs at least one learner")
    if not seeds:
        raise ConfigError("need at least one seed")
    if len(set(seeds)) != len(seeds):
        raise ConfigError(f"duplicate seeds in {list(seeds)}")
    names = [s.name for s in roster]
    if len(set(names)) != len(names):
        raise ConfigError(f"duplicate learner names in roster: {names}")
    if schedule is None:
        schedule = make_schedule(len(dataset), num_blocks, first_block)
    if schedule.n != len(dataset):
        raise ConfigError(f"schedule covers {schedule.n} examples, dataset has {len(dataset)}")
    space = dataset.label_space

    ordered = {s: _ordered_examples(dataset, transform, s) for s in seeds}

    def tasks_for(seed, fixed_of):
        examples = ordered[seed][0]
        feats = {}
        for spec in roster:
            if spec.kind != "prior" and spec.features not in feats:
                feats[spec.features] = featurize([ex.tokens for ex in examples], spec.features)
        out = []
        for s, start, end in schedule.blocks():
            if s == 0:
                continue
            for j, spec in enumerate(roster):
                X = feats.get(spec.features)
                out.append(((seed, s, j), (
                    spec, examples[:start], examples[start:end], space, learner_seed(seed, s, spec),
                    fixed_of(s, j),
                    None if X is None else X[:start],
                    None if X is None else X[start:end],
                )))
        return out

    results: dict = {}
    first = seeds[0]
    with _executor(jobs) as pool:
        results.update(_run_tasks(pool, tasks_for(first, lambda s, j: None)))
        chosen_hp = {(s, j): rep.hparams for (sd, s, j), (_, rep) in results.items() if sd == first}
        rest = [t for seed in seeds[1:] for t in tasks_for(seed, lambda s, j: chosen_hp[(s, j)])]
        results.update(_run_tasks(pool, rest))

    M = len(roster)
    overhead = ensemble_overhead(schedule.num_blocks, M)
    runs = []
    for seed in seeds:
        examples, pid = ordered[seed]
        blocks = []
        for s, start, end in schedule.blocks():
            if s == 0:
                bits = math.fsum([uniform_bits(space)] * (end - start))
                blocks.append(BlockCodelength(0, start, end, (), None, bits))
                continue
            per_model = []
            fits = []
            for j in range(M):
                ex_bits, report = results[(seed, s, j)]
                if not np.all(np.isfinite(ex_bits)):
                    raise InternalError(f"non-finite codelength in block {s} for {roster[j].name}")
                per_model.append(math.fsum(ex_bits.tolist()))
                fits.append({"learner": roster[j].name, **report.to_dict()})
            j_best = int(np.argmin(per_model))
            blocks.append(BlockCodelength(s, start, end, tuple(per_model), j_best,
                                          per_model[j_best], tuple(fits)))
        total = math.fsum(b.bits for b in blocks) + overhead
        if not math.isfinite(total):
            raise InternalError(f"non-finite total codelength for seed {seed}")
        runs.append(SeedRun(seed, pid, tuple(blocks), overhead, total))

    totals = [r.total_bits for r in runs]
    block_means = tuple(
        math.fsum(r.blocks[s].bits for r in runs) / len(runs) for s in range(schedule.num_blocks)
    )
    return ConditionResult(name, schedule.cuts, tuple(names), tuple(runs),
                           math.fsum(totals) / len(totals), stderr(totals), block_means)


class _Serial:
    def __enter__(self):
        return None

    def __exit__(self, *exc):
        return False


def _executor(jobs: int):
    return ProcessPoolExecutor(max_workers=jobs) if jobs and jobs > 1 else _Serial()


def _run_tasks(pool, tasks):
    if pool is None:
        return {key: _fit_block(*args) for key, args in tasks}
    futures = {key: pool.submit(_fit_block, *args) for key, args in tasks}
    return {key: f.result() for key, f in futures.items()}


def compare_conditions(a: ConditionResult, b: ConditionResult) -> DeltaReport:
    """Paired difference ``a - b`` of per-seed MDL.

    ``a`` is judged helpful when it is shorter by more than two paired
    standard errors.
    """
    if a.seeds != b.seeds:
        raise IncomparableResultsError(f"seed lists differ: {a.seeds} vs {b.seeds}")
    if a.cuts != b.cuts:
        raise IncomparableResultsError("block schedules differ")
    if a.roster != b.roster:
        raise IncomparableResultsError(f"rosters differ: {a.roster} vs {b.roster}")
    if [r.permutation_id for r in a.runs] != [r.permutation_id for r in b.runs]:
        raise IncomparableResultsError("example permutations differ between results")
    return delta_from_totals(a.name, b.name, a.totals, b.totals)


def delta_from_totals(a_name: str, b_name: str, a_totals, b_totals) -> DeltaReport:
    deltas = tuple(x - y for x, y in zip(a_totals, b_totals))
    mean = math.fsum(deltas) / len(deltas)
    se = stderr(deltas)
    helpful = se is not None and mean < 0 and abs(mean) > 2 * se
    return DeltaReport(a_name, b_name, deltas, mean, se, "helpful" if helpful else "inconclusive")
