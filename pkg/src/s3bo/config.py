"""Run configuration: nested dataclasses loaded from flat ``section.key = value`` text."""

from __future__ import annotations

import dataclasses
import hashlib
import typing
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from s3bo.acquisition import KINDS
from s3bo.benchmarks import NAMES
from s3bo.errors import ConfigError
from s3bo.gp_sparse import OBJECTIVES, VARIANTS
from s3bo.kernels import FAMILIES, _canonical_family
from s3bo.scheduler import EXPLORE_REGIONS


@dataclass
class KernelConfig:
    family: str = "matern32"
    amplitude: float = 1.0
    lengthscale: tuple = (1.0,)
    ard: bool = True


@dataclass
class GpConfig:
    exact_below_n: int = 256
    variant: str = "fic"
    num_inducing: int = 300
    objective: str = "elbo"
    restarts: int = 5
    freeze_inducing: bool = False


@dataclass
class AcqConfig:
    kind: str = "ei"
    delta: float = 0.1
    budget: int = 20
    explore: str = "relevant"  # or "global"


@dataclass
class EmbedConfig:
    dim_low: int = 4
    seed: typing.Optional[int] = None  # defaults to the run seed
    kind: str = "gaussian"  # or "identity" (no reduction, needs dim_low == bench.dim)


@dataclass
class SchedConfig:
    workers: int = 1
    budget: int = 60
    wallclock_s: typing.Optional[float] = None


@dataclass
class BenchConfig:
    name: str = "sphere"
    dim: int = 100
    delay_lb_s: typing.Optional[float] = None
    delay_ub_s: typing.Optional[float] = None
    normalize_g: bool = False
    lower: typing.Optional[float] = None
    upper: typing.Optional[float] = None


@dataclass
class RunSection:
    seed: int = 0
    mode: str = "minimize"
    n_init: typing.Optional[int] = None  # defaults to max(2, d + 1)
    out_dir: str = "runs/default"
    checkpoint_every: int = 10
    audit: bool = False


@dataclass
class RunConfig:
    kernel: KernelConfig = field(default_factory=KernelConfig)
    gp: GpConfig = field(default_factory=GpConfig)
    acq: AcqConfig = field(default_factory=AcqConfig)
    embed: EmbedConfig = field(default_factory=EmbedConfig)
    sched: SchedConfig = field(default_factory=SchedConfig)
    bench: BenchConfig = field(default_factory=BenchConfig)
    run: RunSection = field(default_factory=RunSection)

    @property
    def n_init(self) -> int:
        return self.run.n_init if self.run.n_init is not None else max(2, self.embed.dim_low + 1)

    @property
    def embed_seed(self) -> int:
        return self.embed.seed if self.embed.seed is not None else self.run.seed

    def flat(self) -> dict:
        out = {}
        for sec in dataclasses.fields(self):
            for f in dataclasses.fields(getattr(self, sec.name)):
                out[f"{sec.name}.{f.name}"] = getattr(getattr(self, sec.name), f.name)
        return out

    def to_text(self) -> str:
        lines = []
        for key, val in self.flat().items():
            if val is None:
                continue
            if isinstance(val, tuple):
                val = ",".join(repr(v) for v in val)
            lines.append(f"{key} = {str(val).lower() if isinstance(val, bool) else val}")
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        """Hash of every setting except the output directory."""
        items = sorted((k, repr(v)) for k, v in self.flat().items() if k != "run.out_dir")
        return hashlib.sha256(repr(items).encode()).hexdigest()[:16]

    def with_overrides(self, overrides: dict) -> "RunConfig":
        """Copy with ``{"section.key": value}`` replacements (Python values, not text)."""
        cfg = dataclasses.replace(self, **{s.name: dataclasses.replace(getattr(self, s.name))
                                           for s in dataclasses.fields(self)})
        for key, val in overrides.items():
            _assign(cfg, key, val, parse=False)
        validate(cfg)
        return cfg


def _coerce(raw: str, hint, key: str):
    origin = typing.get_origin(hint)
    if origin is typing.Union:
        if raw.strip().lower() in ("", "none", "null"):
            return None
        hint = next(a for a in typing.get_args(hint) if a is not type(None))
    try:
        if hint is bool:
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if hint is int:
            return int(raw)
        if hint is float:
            return float(raw)
        if hint is tuple:
            return tuple(float(v) for v in raw.replace(",", " ").split())
        return raw.strip()
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {getattr(hint, '__name__', hint)}") from exc


def _assign(cfg: RunConfig, key: str, raw, parse: bool = True):
    if "." not in key:
        raise ConfigError(f"unknown key {key!r} (expected section.name)")
    section, name = key.split(".", 1)
    sub = getattr(cfg, section, None)
    if sub is None or not dataclasses.is_dataclass(sub) or name not in {f.name for f in dataclasses.fields(sub)}:
        raise ConfigError(f"unknown key {key!r}")
    hints = typing.get_type_hints(type(sub))
    if parse:
        value = _coerce(str(raw), hints[name], key)
    elif hints[name] is tuple:
        value = tuple(float(v) for v in np.atleast_1d(raw))
    else:
        value = raw
    setattr(sub, name, value)


def parse_config(text: str) -> RunConfig:
    cfg = RunConfig()
    seen = set()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        seen.add(key)
        _assign(cfg, key, raw)
    validate(cfg)
    return cfg


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def validate(cfg: RunConfig) -> None:
    def need(cond, msg):
        if not cond:
            raise ConfigError(msg)

    try:
        cfg.kernel.family = _canonical_family(cfg.kernel.family)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    need(cfg.kernel.family in FAMILIES, "kernel.family invalid")
    need(cfg.kernel.amplitude > 0, "kernel.amplitude must be positive")
    need(len(cfg.kernel.lengthscale) >= 1 and all(v > 0 for v in cfg.kernel.lengthscale),
         "kernel.lengthscale must be positive")
    need(cfg.gp.variant in VARIANTS, f"gp.variant must be one of {VARIANTS}")
    need(cfg.gp.objective in OBJECTIVES, f"gp.objective must be one of {OBJECTIVES}")
    need(cfg.gp.num_inducing >= 1, "gp.num_inducing must be >= 1")
    need(cfg.gp.exact_below_n >= 0, "gp.exact_below_n must be >= 0")
    need(cfg.gp.restarts >= 1, "gp.restarts must be >= 1")
    need(cfg.acq.kind in KINDS, f"acq.kind must be one of {KINDS}")
    need(0 < cfg.acq.delta < 1, "acq.delta must lie in (0, 1)")
    need(cfg.acq.budget >= 1, "acq.budget must be >= 1")
    need(cfg.acq.explore in EXPLORE_REGIONS, f"acq.explore must be one of {EXPLORE_REGIONS}")
    need(cfg.bench.name in NAMES, f"bench.name must be one of {NAMES}")
    if cfg.bench.name == "hartmann4":
        cfg.bench.dim = 4
    need(cfg.bench.dim >= 1, "bench.dim must be >= 1")
    need(cfg.bench.name != "sphere_general", "sphere_general needs weights and is library-only")
    need(1 <= cfg.embed.dim_low <= cfg.bench.dim, "embed.dim_low must satisfy 1 <= d <= bench.dim")
    need(cfg.embed.kind in ("gaussian", "identity"), "embed.kind must be gaussian or identity")
    if cfg.embed.kind == "identity":
        need(cfg.embed.dim_low == cfg.bench.dim, "identity embedding needs embed.dim_low == bench.dim")
    lb, ub = cfg.bench.delay_lb_s, cfg.bench.delay_ub_s
    need((lb is None) == (ub is None), "bench.delay_lb_s and bench.delay_ub_s go together")
    if lb is not None:
        need(0 <= lb <= ub, "delay bounds must satisfy 0 <= lb <= ub")
    if cfg.bench.lower is not None or cfg.bench.upper is not None:
        need(cfg.bench.lower is not None and cfg.bench.upper is not None and cfg.bench.lower < cfg.bench.upper,
             "bench.lower and bench.upper must both be set with lower < upper")
    need(cfg.sched.workers >= 1, "sched.workers must be >= 1")
    need(cfg.sched.budget >= 0, "sched.budget must be >= 0")
    need(cfg.sched.wallclock_s is None or cfg.sched.wallclock_s > 0, "sched.wallclock_s must be positive")
    need(cfg.run.mode in ("minimize", "maximize"), "run.mode must be minimize or maximize")
    need(cfg.run.n_init is None or cfg.run.n_init >= 1, "run.n_init must be >= 1")
    need(cfg.run.checkpoint_every >= 1, "run.checkpoint_every must be >= 1")
