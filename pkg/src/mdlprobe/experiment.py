"""Experiment configs, orchestration across conditions, and report output.

A config is one YAML (or JSON) mapping::

    name: count-comparison
    dataset:                      # either a JSONL path ...
      path: data.jsonl
    # dataset: {generator: count_comparison, params: {n: 4096, seed: 0}}   # ... or a generator
    cap: 10000                    # keep at most this many examples (seeded subset)
    schedule: {num_blocks: 9, first_block: 64}
    seeds: [0, 1, 2, 3, 4]
    roster:
      - {kind: prior}
      - {kind: naive_bayes, grid: {alpha: [0.01, 0.1, 1.0]}}
      - {kind: logistic, name: logistic, features: {ngram: 2, dim: 262144}}
    conditions:
      - {name: baseline, transform: {kind: identity}}
      - {name: hint, transform: {kind: append_auxiliary, field: oracle}}
      - {name: random, transform: {kind: matched_control, of: some_mask_condition}}
    baseline: baseline
    comparisons: [[hint, random]] # extra (a, b) pairs besides every condition vs baseline
"""
from __future__ import annotations

import csv
import io
import json
import warnings
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import yaml

from . import __version__
from .data import DEFAULT_CAP, Dataset, cap_dataset, load_jsonl
from .engine import ConditionResult, compare_conditions, run_condition
from .errors import ConfigError, DataError, MDLError
from .learners import Discretization, LearnerSpec, make_spec
from .schedule import ROUNDING_RULE, BlockSchedule, make_schedule
from .synthetic import GENERATORS
from .transforms import MASKING_KINDS, Transform, matched_control_for, transform_from_dict

DEFAULT_SEEDS = (0, 1, 2, 3, 4)
_TOP_KEYS = {"name", "dataset", "cap", "schedule", "seeds", "roster", "conditions", "baseline",
             "comparisons", "cap_seed"}


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    dataset: dict
    roster: tuple[LearnerSpec, ...]
    conditions: tuple[tuple[str, Transform], ...]
    baseline: str
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    cap: int | None = DEFAULT_CAP
    cap_seed: int = 0
    num_blocks: int = 9
    first_block: int = 64
    comparisons: tuple[tuple[str, str], ...] = ()
    base_dir: Path = field(default=Path("."), compare=False)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "dataset": self.dataset,
            "cap": self.cap,
            "cap_seed": self.cap_seed,
            "schedule": {"num_blocks": self.num_blocks, "first_block": self.first_block},
            "seeds": list(self.seeds),
            "roster": [s.to_dict() for s in self.roster],
            "conditions": [{"name": n, "transform": t.to_dict()} for n, t in self.conditions],
            "baseline": self.baseline,
            "comparisons": [list(p) for p in self.comparisons],
        }


def _learner_from_dict(d: dict) -> LearnerSpec:
    if not isinstance(d, dict) or "kind" not in d:
        raise ConfigError(f"roster entry needs a 'kind': {d!r}")
    d = dict(d)
    kind = d.pop("kind")
    disc = d.pop("discretize", None)
    known = {"name", "grid", "features", "calibrate", "max_epochs", "patience", "batch_size", "smoothing"}
    unknown = set(d) - known
    if unknown:
        raise ConfigError(f"roster entry {kind}: unknown keys {sorted(unknown)}")
    try:
        spec = make_spec(kind, **d)
    except TypeError as e:
        raise ConfigError(f"roster entry {kind}: {e}") from None
    if disc is not None:
        spec = replace(spec, discretize=Discretization(float(disc.get("step", 0.2)),
                                                       float(disc["lo"]), float(disc["hi"])))
    return spec


def parse_config(raw: dict, base_dir: Path = Path(".")) -> ExperimentConfig:
    """Validate a config mapping without running anything."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    for key in ("dataset", "roster", "conditions"):
        if key not in raw:
            raise ConfigError(f"config is missing {key!r}")

    ds = raw["dataset"]
    if not isinstance(ds, dict) or ("path" in ds) == ("generator" in ds):
        raise ConfigError("dataset needs exactly one of 'path' or 'generator'")
    if "generator" in ds and ds["generator"] not in GENERATORS:
        raise ConfigError(f"unknown generator {ds['generator']!r}; expected one of {sorted(GENERATORS)}")

    roster = tuple(_learner_from_dict(d) for d in raw["roster"])
    if not roster:
        raise ConfigError("roster is empty")
    names = [s.name for s in roster]
    if len(set(names)) != len(names):
        raise ConfigError(f"duplicate learner names {names}")

    conds: list[tuple[str, Transform]] = []
    by_name: dict[str, Transform] = {}
    for c in raw["conditions"]:
        if not isinstance(c, dict) or "name" not in c:
            raise ConfigError(f"condition needs a 'name': {c!r}")
        name = str(c["name"])
        if name in by_name:
            raise ConfigError(f"duplicate condition name {name!r}")
        td = dict(c.get("transform") or {"kind": "identity"})
        if td.get("kind") == "matched_control":
            ref = td.get("of")
            if ref not in by_name:
                raise ConfigError(f"condition {name!r}: matched_control refers to unknown or later condition {ref!r}")
            t = matched_control_for(by_name[ref])
        else:
            t = transform_from_dict(td)
        by_name[name] = t
        conds.append((name, t))
    if not conds:
        raise ConfigError("no conditions")

    baseline = raw.get("baseline", conds[0][0])
    if baseline not in by_name:
        raise ConfigError(f"baseline {baseline!r} is not a condition")
    comparisons = []
    for pair in raw.get("comparisons") or []:
        if len(pair) != 2 or any(p not in by_name for p in pair):
            raise ConfigError(f"bad comparison {pair!r}")
        comparisons.append((str(pair[0]), str(pair[1])))

    seeds = raw.get("seeds", list(DEFAULT_SEEDS))
    if not seeds or not all(isinstance(s, int) and not isinstance(s, bool) for s in seeds):
        raise ConfigError(f"seeds must be a non-empty list of ints, got {seeds!r}")
    if len(set(seeds)) != len(seeds):
        raise ConfigError(f"duplicate seeds {seeds}")
    sched = raw.get("schedule") or {}
    cap = raw.get("cap", DEFAULT_CAP)
    if cap is not None and (not isinstance(cap, int) or cap < 1):
        raise ConfigError(f"cap must be a positive int or null, got {cap!r}")
    return ExperimentConfig(
        name=str(raw.get("name", "experiment")),
        dataset=dict(ds),
        roster=roster,
        conditions=tuple(conds),
        baseline=baseline,
        seeds=tuple(seeds),
        cap=cap,
        cap_seed=int(raw.get("cap_seed", 0)),
        num_blocks=int(sched.get("num_blocks", 9)),
        first_block=int(sched.get("first_block", 64)),
        comparisons=tuple(comparisons),
        base_dir=base_dir,
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except yaml.YAMLError as e:
        raise ConfigError(f"cannot parse {path}: {e}") from None
    return parse_config(raw, base_dir=path.parent)


def load_dataset(cfg: ExperimentConfig) -> Dataset:
    ds = cfg.dataset
    if "path" in ds:
        p = Path(ds["path"])
        if not p.is_absolute():
            p = cfg.base_dir / p
        return load_jsonl(p, cap=cfg.cap, seed=cfg.cap_seed)
    params = dict(ds.get("params") or {})
    try:
        data = GENERATORS[ds["generator"]](**params)
    except TypeError as e:
        raise ConfigError(f"generator {ds['generator']}: {e}") from None
    return cap_dataset(data, cfg.cap, cfg.cap_seed)


# ---------------------------------------------------------------------------


@dataclass
class Report:
    data: dict
    csvs: dict[str, str]

    def to_json(self) -> str:
        return json.dumps(self.data, indent=2, sort_keys=True) + "\n"

    def write(self, out_dir) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, text in self.csvs.items():
            (out / f"{name}.csv").write_text(text, encoding="utf-8")
        (out / "report.json").write_text(self.to_json(), encoding="utf-8")


def condition_csv(result: ConditionResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["seed", "block", "block_start", "block_end", "bits", "chosen_model"])
    for run in result.runs:
        for b in run.blocks:
            chosen = "uniform_prior" if b.chosen is None else result.roster[b.chosen]
            w.writerow([run.seed, b.index, b.start, b.end, repr(b.bits), chosen])
    return buf.getvalue()


def _wordlist_warnings(cfg: ExperimentConfig) -> list[dict]:
    out = []
    lists = [(n, set(t["words"])) for n, t in cfg.conditions if t.kind == "mask_by_wordlist"]
    for i, (na, wa) in enumerate(lists):
        for nb, wb in lists[i + 1:]:
            common = wa & wb
            if common:
                out.append({"code": "wordlist_overlap", "conditions": [na, nb],
                            "count": len(common), "message": f"{len(common)} words masked by both {na} and {nb}"})
    return out


def run_experiment(cfg: ExperimentConfig, jobs: int = 1) -> Report:
    """Run every condition on shared seeds and schedule; nothing is written here."""
    dataset = load_dataset(cfg)
    warn_list: list[dict] = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        schedule = make_schedule(len(dataset), cfg.num_blocks, cfg.first_block)
    for w in caught:
        warn_list.append({"code": "schedule_fallback", "message": str(w.message)})
    if len(cfg.seeds) == 1:
        warn_list.append({"code": "single_seed", "message": "one seed: standard errors are not available"})
    warn_list.extend(_wordlist_warnings(cfg))

    results: dict[str, ConditionResult] = {}
    for name, t in cfg.conditions:
        try:
            results[name] = run_condition(dataset, t, cfg.roster, cfg.seeds, schedule=schedule,
                                          name=name, jobs=jobs)
        except MDLError as e:
            raise type(e)(f"condition {name!r}: {e}") from e

    pairs = [(n, cfg.baseline) for n, _ in cfg.conditions if n != cfg.baseline] + list(cfg.comparisons)
    deltas = [compare_conditions(results[a], results[b]).to_dict() for a, b in pairs]

    data = {
        "tool": "mdlprobe",
        "version": __version__,
        "config": cfg.to_dict(),
        "dataset": {
            "name": dataset.name,
            "n": len(dataset),
            "checksum": dataset.checksum,
            "label_space": dataset.label_space.to_dict(),
            "label_names": list(dataset.label_names) if dataset.label_names else None,
        },
        "schedule": {
            "cuts": list(schedule.cuts),
            "num_blocks": schedule.num_blocks,
            "first_block": cfg.first_block,
            "fallback": schedule.fallback,
            "rounding": ROUNDING_RULE,
        },
        "conditions": [results[n].to_dict() for n, _ in cfg.conditions],
        "deltas": deltas,
        "warnings": warn_list,
    }
    return Report(data, {n: condition_csv(results[n]) for n, _ in cfg.conditions})


def report_schema() -> dict:
    return json.loads(resources.files("mdlprobe").joinpath("report.schema.json").read_text())


def validate_report(data: dict) -> None:
    """Raise ``jsonschema.ValidationError`` if ``data`` does not match the report schema."""
    import jsonschema

    jsonschema.validate(data, report_schema())


def load_report(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise DataError(f"report not found: {path}") from None
    except json.JSONDecodeError as e:
        raise DataError(f"{path}: not JSON ({e.msg})") from None


def deltas_between_reports(a: dict, b: dict) -> list[dict]:
    """Paired per-condition deltas ``a - b`` for conditions present in both reports."""
    from .engine import delta_from_totals
    from .errors import IncomparableResultsError

    if a["schedule"]["cuts"] != b["schedule"]["cuts"]:
        raise IncomparableResultsError("reports use different block schedules")
    b_conds = {c["name"]: c for c in b["conditions"]}
    out = []
    for ca in a["conditions"]:
        cb = b_conds.get(ca["name"])
        if cb is None:
            continue
        sa = [r["seed"] for r in ca["runs"]]
        sb = [r["seed"] for r in cb["runs"]]
        if sa != sb or [r["permutation_id"] for r in ca["runs"]] != [r["permutation_id"] for r in cb["runs"]]:
            raise IncomparableResultsError(f"condition {ca['name']!r}: seeds or permutations differ")
        d = delta_from_totals(ca["name"], cb["name"], [r["total_bits"] for r in ca["runs"]],
                              [r["total_bits"] for r in cb["runs"]])
        out.append(d.to_dict())
    return out
