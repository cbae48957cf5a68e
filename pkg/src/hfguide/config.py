"""Run configuration: YAML schema, strict parsing, dotted overrides.

The schema is the nested dataclass tree below; unknown keys are rejected.
`key.subkey=value` overrides reparse the value with the field's type.
The effective configuration is echoed into every run directory so reruns
are reproducible from the echo alone.
"""
from __future__ import annotations

import dataclasses
import datetime as _dt
import os
from dataclasses import dataclass, field

import yaml

from .errors import ConfigError

RUN_ROOT_ENV = "HFGUIDE_RUN_ROOT"


@dataclass
class ForgeSection:
    source_dir: str = "sources"
    out_root: str = "dataset"
    tasks: list = field(default_factory=lambda: ["lowlight", "colorization"])
    compose: list = field(default_factory=list)  # list of task-tag lists
    workers: int = 1
    removal_pairs: int = 0
    seed: int = 0
    source_count: int = 0     # >0: synthesize this many sources first
    image_size: int = 32


@dataclass
class ScheduleSection:
    t_steps: int = 16
    sigma_min: float = 0.02
    sigma_max: float = 10.0
    rho: float = 7.0


@dataclass
class ChurnSection:
    s_churn: float = 0.0
    s_noise: float = 1.0
    s_tmin: float = 0.0
    s_tmax: float = float("inf")


@dataclass
class SamplerSection:
    lam: float = 0.001
    eta: float = 1.0
    s_img: float = 1.0
    s_txt: float = 1.0
    seed: int = 0
    hgs: bool = True
    use_fourier: bool = True
    use_sobel: bool = True
    cutoff_fraction: float = 0.25
    lora_rank: int = 4


@dataclass
class TrainSection:
    iters: int = 1200
    batch: int = 8
    lr: float = 2e-3
    dropout_p: float = 0.075
    seed: int = 0
    log_every: int = 50


@dataclass
class PathsSection:
    weights: str = "toy_denoiser.hfgw"
    manifest: str = "manifest.jsonl"


@dataclass
class RunConfig:
    run_root: str = ""
    forge: ForgeSection = field(default_factory=ForgeSection)
    schedule: ScheduleSection = field(default_factory=ScheduleSection)
    churn: ChurnSection = field(default_factory=ChurnSection)
    sampler: SamplerSection = field(default_factory=SamplerSection)
    train: TrainSection = field(default_factory=TrainSection)
    paths: PathsSection = field(default_factory=PathsSection)

    def __post_init__(self):
        if not self.run_root:
            self.run_root = os.environ.get(RUN_ROOT_ENV, "runs")


def _coerce(value, typ, key):
    if typ is bool:
        if isinstance(value, bool):
            return value
        if isinstance(value, str) and value.lower() in ("true", "false", "1", "0", "yes", "no"):
            return value.lower() in ("true", "1", "yes")
        raise ConfigError(f"{key}: expected a boolean, got {value!r}")
    if typ is int:
        if isinstance(value, bool) or not isinstance(value, (int, str)):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        try:
            return int(value)
        except ValueError as exc:
            raise ConfigError(f"{key}: expected an integer, got {value!r}") from exc
    if typ is float:
        try:
            return float(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{key}: expected a number, got {value!r}") from exc
    if typ is str:
        return str(value)
    if typ is list:
        if isinstance(value, str):
            return [v for v in (s.strip() for s in value.split(",")) if v]
        if isinstance(value, list):
            return value
        raise ConfigError(f"{key}: expected a list, got {value!r}")
    raise ConfigError(f"{key}: unsupported field type {typ!r}")


def _fill(cls, data, prefix=""):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"section {prefix or cls.__name__!r} must be a mapping")
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(known)
    if unknown:
        raise ConfigError(f"unknown config key(s): "
                          + ", ".join(sorted(prefix + k for k in unknown)))
    kwargs = {}
    for name, f in known.items():
        if name not in data:
            continue
        default = _default_of(f)
        if dataclasses.is_dataclass(default):
            kwargs[name] = _fill(type(default), data[name], prefix=f"{prefix}{name}.")
        else:
            kwargs[name] = _coerce(data[name], type(default), prefix + name)
    return cls(**kwargs)


def _default_of(f):
    if f.default is not dataclasses.MISSING:
        return f.default
    return f.default_factory()


def load_config(path=None, overrides=()):
    """RunConfig from an optional YAML file plus dotted key=value overrides."""
    data = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                data = yaml.safe_load(fh) or {}
        except FileNotFoundError:
            raise
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse config {path!r}: {exc}") from exc
    cfg = _fill(RunConfig, data)
    for ov in overrides:
        apply_override(cfg, ov)
    return cfg


def apply_override(cfg, assignment):
    """Apply one `section.key=value` (or `key=value`) override in place."""
    if "=" not in assignment:
        raise ConfigError(f"override {assignment!r} must look like key=value")
    dotted, value = assignment.split("=", 1)
    parts = dotted.strip().split(".")
    obj = cfg
    for p in parts[:-1]:
        if not dataclasses.is_dataclass(obj) or p not in {f.name for f in dataclasses.fields(obj)}:
            raise ConfigError(f"unknown config key: {dotted}")
        obj = getattr(obj, p)
    names = {f.name: f for f in dataclasses.fields(obj)} if dataclasses.is_dataclass(obj) else {}
    leaf = parts[-1]
    if leaf not in names:
        raise ConfigError(f"unknown config key: {dotted}")
    f = names[leaf]
    if dataclasses.is_dataclass(getattr(obj, leaf)):
        raise ConfigError(f"{dotted} is a section, not a value")
    typ = type(_default_of(f))
    setattr(obj, leaf, _coerce(value, typ, dotted))
    return cfg


def to_dict(cfg):
    return dataclasses.asdict(cfg)


def echo_config(cfg, run_dir):
    """Write the effective config to the run directory; returns the path."""
    path = os.path.join(run_dir, "effective_config.yaml")
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(to_dict(cfg), fh, sort_keys=True)
    return path


def make_run_dir(cfg, command):
    """Timestamped run directory under the configured root."""
    stamp = _dt.datetime.now().strftime("%Y%m%d-%H%M%S-%f")
    run_dir = os.path.join(cfg.run_root, f"{command}-{stamp}")
    os.makedirs(run_dir, exist_ok=True)
    echo_config(cfg, run_dir)
    return run_dir
