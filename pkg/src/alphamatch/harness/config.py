"""Experiment spec files.

A spec is a YAML mapping with these top-level keys::

    dataset:            # required
      generator: two_moons          # two_moons | circles | blobs
      params: {n: 1000, noise: 0.1} # keyword arguments of the generator
      labels_per_class: 4
      n_test: 200
      seed: null                    # null: each run uses its own seed
    trainers:           # list of trainer entries (or use `method:` shorthand)
      - method: alphamatch
        alpha: [1.5, 2.0]           # a list expands into one trainer per value
        kernel: {kind: gaussian, sigma: 0.1}
    defaults: {epochs: 100}         # merged into every trainer entry
    seeds: [0, 1, 2]
    output: out/                    # falls back to $ALPHAMATCH_OUT
    emit: {runs: true, summary: true}

Trainer keys are the :class:`~alphamatch.trainers.TrainerConfig` field names,
except that the consistency weight is spelled ``lambda``.  An optional
``name`` labels the trainer in output file names.
"""

import inspect
import itertools
import os
import re
from dataclasses import dataclass, fields

import yaml

from ..augment import PerturbationKernel
from ..data import GENERATORS
from ..errors import DomainError, SpecError
from ..trainers import TrainerConfig

__all__ = [
    "DatasetSpec",
    "ExperimentSpec",
    "DEFAULT_OUTPUT",
    "parse_spec",
    "parse_text",
    "load_raw",
    "build_spec",
    "serialize",
    "apply_overrides",
]

DEFAULT_OUTPUT = "alphamatch_out"

_TOP_KEYS = {"dataset", "trainers", "method", "defaults", "seeds", "output", "emit"}
_DATASET_KEYS = {"generator", "params", "labels_per_class", "n_test", "seed"}
_EMIT_KEYS = {"runs", "summary"}
_KERNEL_KEYS = {"kind", "sigma", "max_angle", "drop_prob", "center"}
_GRID_KEYS = ("alpha", "beta", "lambda", "n_aug", "tau")
_NAME_RE = re.compile(r"^[A-Za-z0-9_.-]+$")

# spec key -> TrainerConfig field
_TRAINER_FIELDS = {f.name: f.name for f in fields(TrainerConfig) if f.name not in ("lam", "seed")}
_TRAINER_FIELDS["lambda"] = "lam"
_TRAINER_KEYS = set(_TRAINER_FIELDS) | {"name"}
_INT_FIELDS = {"n_aug", "epochs", "batch_s", "mu_ratio", "hidden", "steps_per_gamma", "steps_per_epoch"}
_BOOL_FIELDS = {"augment_clean", "full_batch", "track_objective"}
_STR_FIELDS = {"method", "arch"}


@dataclass(frozen=True)
class DatasetSpec:
    generator: str = "two_moons"
    params: tuple = ()
    labels_per_class: int = 4
    n_test: int = 200
    seed: int = None

    def kwargs(self):
        return dict(self.params)

    def data_seed(self, run_seed):
        return run_seed if self.seed is None else self.seed


@dataclass(frozen=True)
class ExperimentSpec:
    dataset: DatasetSpec
    trainers: tuple
    names: tuple
    seeds: tuple
    output: str = DEFAULT_OUTPUT
    emit_runs: bool = True
    emit_summary: bool = True

    def configs(self):
        """``(name, TrainerConfig)`` pairs in declaration order."""
        return list(zip(self.names, self.trainers))


def _unknown(keys, allowed, where):
    extra = sorted(set(keys) - set(allowed))
    if extra:
        raise SpecError(f"unknown keys in {where}: {', '.join(extra)}")


def _int(v, where, lo=None):
    if isinstance(v, bool) or not isinstance(v, int):
        if isinstance(v, float) and v.is_integer():
            v = int(v)
        else:
            raise SpecError(f"{where} must be an integer, got {v!r}")
    if lo is not None and v < lo:
        raise SpecError(f"{where} must be >= {lo}, got {v}")
    return v


def _float(v, where):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SpecError(f"{where} must be a number, got {v!r}")
    return float(v)


def _bool(v, where):
    if not isinstance(v, bool):
        raise SpecError(f"{where} must be true or false, got {v!r}")
    return v


def _mapping(v, where):
    if v is None:
        return {}
    if not isinstance(v, dict):
        raise SpecError(f"{where} must be a mapping")
    return v


def _dataset(raw):
    raw = _mapping(raw, "dataset")
    _unknown(raw, _DATASET_KEYS, "dataset")
    gen = raw.get("generator", "two_moons")
    if gen not in GENERATORS:
        raise SpecError(f"dataset.generator must be one of {sorted(GENERATORS)}, got {gen!r}")
    params = _mapping(raw.get("params"), "dataset.params")
    allowed = [p for p in inspect.signature(GENERATORS[gen]).parameters if p != "seed"]
    _unknown(params, allowed, f"dataset.params for {gen}")
    clean = {}
    for k in sorted(params):
        v = params[k]
        clean[k] = _int(v, f"dataset.params.{k}", 1) if k in ("n", "centers") else _float(v, f"dataset.params.{k}")
    seed = raw.get("seed")
    return DatasetSpec(
        generator=gen,
        params=tuple(clean.items()),
        labels_per_class=_int(raw.get("labels_per_class", 4), "dataset.labels_per_class", 1),
        n_test=_int(raw.get("n_test", 200), "dataset.n_test", 0),
        seed=None if seed is None else _int(seed, "dataset.seed", 0),
    )


def _kernel(raw, where):
    if isinstance(raw, PerturbationKernel):
        return raw
    raw = _mapping(raw, where)
    _unknown(raw, _KERNEL_KEYS, where)
    kw = {}
    if "kind" in raw:
        kw["kind"] = raw["kind"]
    for k in ("sigma", "max_angle", "drop_prob"):
        if k in raw:
            kw[k] = _float(raw[k], f"{where}.{k}")
    if "center" in raw:
        c = raw["center"]
        if not isinstance(c, (list, tuple)):
            raise SpecError(f"{where}.center must be a list of numbers")
        kw["center"] = tuple(_float(x, f"{where}.center") for x in c)
    try:
        return PerturbationKernel(**kw)
    except DomainError as exc:
        raise SpecError(f"{where}: {exc}") from None


def _trainer(entry, where):
    kw = {}
    for key, value in entry.items():
        if key == "name":
            continue
        fname = _TRAINER_FIELDS[key]
        here = f"{where}.{key}"
        if fname == "kernel":
            kw[fname] = _kernel(value, here)
        elif fname in _INT_FIELDS:
            kw[fname] = None if value is None and fname == "steps_per_epoch" else _int(value, here, 1)
        elif fname in _BOOL_FIELDS:
            kw[fname] = _bool(value, here)
        elif fname in _STR_FIELDS:
            kw[fname] = str(value)
        else:
            kw[fname] = _float(value, here)
    try:
        return TrainerConfig(**kw)
    except DomainError as exc:
        raise SpecError(f"{where}: {exc}") from None


def _expand(entry):
    """Split list-valued grid keys into one entry per combination."""
    axes = [(k, entry[k]) for k in _GRID_KEYS if isinstance(entry.get(k), list)]
    if not axes:
        return [entry]
    out = []
    for combo in itertools.product(*(vals for _, vals in axes)):
        e = dict(entry)
        e.update(zip((k for k, _ in axes), combo))
        out.append(e)
    return out


def _auto_name(entry, axes):
    parts = [entry["method"]]
    for k in axes:
        parts.append(f"{k}{entry[k]}")
    return "-".join(str(p) for p in parts)


def build_spec(raw, env=None):
    """Validate a raw mapping (as loaded from YAML) and fill in defaults."""
    env = os.environ if env is None else env
    if not isinstance(raw, dict):
        raise SpecError("spec must be a mapping at the top level")
    _unknown(raw, _TOP_KEYS, "spec")
    if "dataset" not in raw:
        raise SpecError("spec needs a dataset section")
    dataset = _dataset(raw["dataset"])

    if "trainers" in raw and "method" in raw:
        raise SpecError("give either trainers or the method shorthand, not both")
    if "trainers" in raw:
        entries = raw["trainers"]
        if not isinstance(entries, list) or not entries:
            raise SpecError("trainers must be a nonempty list")
    elif "method" in raw:
        entries = [{"method": raw["method"]}]
    else:
        raise SpecError("spec needs a trainers list or a method")
    defaults = _mapping(raw.get("defaults"), "defaults")
    _unknown(defaults, _TRAINER_KEYS - {"name", "method"}, "defaults")

    expanded = []
    for i, e in enumerate(entries):
        e = _mapping(e, f"trainers[{i}]")
        _unknown(e, _TRAINER_KEYS, f"trainers[{i}]")
        if "method" not in e:
            raise SpecError(f"trainers[{i}] needs a method")
        merged = {**defaults, **e}
        axes = [k for k in _GRID_KEYS if isinstance(merged.get(k), list)]
        for sub in _expand(merged):
            if "name" not in e and axes:
                sub["name"] = _auto_name(sub, axes)
            expanded.append((i, sub))

    configs, names = [], []
    for i, e in expanded:
        configs.append(_trainer(e, f"trainers[{i}]"))
        names.append(e.get("name"))
    names = _fill_names(names, configs)

    seeds = raw.get("seeds", [0])
    if not isinstance(seeds, list):
        raise SpecError("seeds must be a list of integers")
    if not seeds:
        raise SpecError("seeds must be a nonempty list")
    seeds = tuple(_int(s, "seeds", 0) for s in seeds)
    if len(set(seeds)) != len(seeds):
        raise SpecError("seeds must not repeat")

    output = raw.get("output") or env.get("ALPHAMATCH_OUT") or DEFAULT_OUTPUT
    emit = _mapping(raw.get("emit"), "emit")
    _unknown(emit, _EMIT_KEYS, "emit")
    return ExperimentSpec(
        dataset=dataset,
        trainers=tuple(configs),
        names=tuple(names),
        seeds=seeds,
        output=str(output),
        emit_runs=_bool(emit.get("runs", True), "emit.runs"),
        emit_summary=_bool(emit.get("summary", True), "emit.summary"),
    )


def _fill_names(names, configs):
    methods = [c.method for c in configs]
    out = []
    for i, (n, c) in enumerate(zip(names, configs)):
        if n is None:
            n = c.method if methods.count(c.method) == 1 else f"{c.method}-{methods[: i + 1].count(c.method)}"
        n = str(n)
        if not _NAME_RE.match(n):
            raise SpecError(f"trainer name {n!r} may only use letters, digits, '.', '_' and '-'")
        out.append(n)
    if len(set(out)) != len(out):
        raise SpecError(f"trainer names must be unique, got {out}")
    return out


def load_raw(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise SpecError(f"cannot read spec {path}: {exc.strerror}") from None
    return _load_text(text)


def _load_text(text):
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise SpecError(f"malformed spec: {exc}") from None
    return {} if raw is None else raw


def parse_text(text, env=None):
    return build_spec(_load_text(text), env)


def parse_spec(path, env=None):
    """Read, validate and default-fill the spec at ``path``."""
    return build_spec(load_raw(path), env)


def _trainer_dict(name, cfg):
    d = {"name": name}
    for key, fname in _TRAINER_FIELDS.items():
        v = getattr(cfg, fname)
        d[key] = v.to_dict() if fname == "kernel" else v
    return d


def to_dict(spec, include_output=True):
    ds = spec.dataset
    d = {
        "dataset": {
            "generator": ds.generator,
            "params": dict(ds.params),
            "labels_per_class": ds.labels_per_class,
            "n_test": ds.n_test,
            "seed": ds.seed,
        },
        "trainers": [_trainer_dict(n, c) for n, c in spec.configs()],
        "seeds": list(spec.seeds),
        "emit": {"runs": spec.emit_runs, "summary": spec.emit_summary},
    }
    if include_output:
        d["output"] = spec.output
    return d


def serialize(spec, include_output=True):
    """Fully expanded YAML text; ``parse_text(serialize(s)) == s``."""
    return yaml.safe_dump(to_dict(spec, include_output), sort_keys=True, default_flow_style=False)


def apply_overrides(raw, **overrides):
    """Apply command-line overrides to a raw spec mapping (``None`` values are skipped).

    Trainer-level keys (``alpha``, ``beta``, ``lambda``, ``n_aug``, ``tau``,
    ``method``, ``epochs``) are set on every trainer entry; ``seeds`` and
    ``output`` replace the top-level values.
    """
    raw = dict(raw)
    trainer_over = {k: v for k, v in overrides.items() if k not in ("seeds", "output") and v is not None}
    if trainer_over:
        if "trainers" in raw:
            entries = raw["trainers"] if isinstance(raw["trainers"], list) else []
            new = []
            for e in entries:
                e = dict(e) if isinstance(e, dict) else e
                if isinstance(e, dict):
                    e.update(trainer_over)
                    if "method" in trainer_over:
                        e.pop("name", None)
                new.append(e)
            raw["trainers"] = new
        else:
            entry = {"method": raw.pop("method")} if "method" in raw else {}
            entry.update(trainer_over)
            raw["trainers"] = [entry]
    if overrides.get("seeds") is not None:
        raw["seeds"] = list(overrides["seeds"])
    if overrides.get("output") is not None:
        raw["output"] = overrides["output"]
    return raw
