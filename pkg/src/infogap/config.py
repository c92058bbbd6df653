"""
Run configuration: a flat ``key = value`` text format with dotted sections.

    graph = data/village.txt
    p = auto
    budget = 0.01
    methods = HD,KC,DD,CHD
    ga.population_size = 100
    gen.gamma = 2.5

Exactly one of ``graph`` or the ``gen.*`` generator block must be present.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Any

from .fairmax import GAConfig
from .generators import DegreeModel, GeneratorConfig
from .seeds import SeedMethod


class ConfigError(ValueError):
    pass


DEFAULT_METHODS = ("HD", "KC", "DD", "CHD")


@dataclass
class RunConfig:
    graph: str | None = None
    generator: GeneratorConfig | None = None
    giant_component: bool = False
    p: float | None = None  # None: estimate p_c
    dd_p: float | None = None  # None: same as p
    budget: float = 0.01
    realizations: int | None = None  # None: 10 N
    methods: tuple[str, ...] = DEFAULT_METHODS
    benchmark_mode: str = "resample"
    grid_points: int = 40
    runs_per_p: int = 2000
    numeric_repeats: int = 10
    ga: GAConfig = field(default_factory=GAConfig)
    out: str = "out"
    seed: int = 0
    workers: int | None = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if (self.graph is None) == (self.generator is None):
            raise ConfigError("exactly one graph source (graph file or generator) is required")
        if not 0 < self.budget <= 1:
            raise ConfigError(f"budget must lie in (0, 1], got {self.budget}")
        if self.p is not None and not 0 <= self.p <= 1:
            raise ConfigError(f"p must lie in [0, 1], got {self.p}")
        if self.dd_p is not None and not 0 <= self.dd_p <= 1:
            raise ConfigError(f"dd_p must lie in [0, 1], got {self.dd_p}")
        if self.realizations is not None and self.realizations < 1:
            raise ConfigError("realizations must be >= 1")
        if self.benchmark_mode not in ("resample", "fixed"):
            raise ConfigError(f"unknown benchmark mode {self.benchmark_mode!r}")
        if self.grid_points < 3 or self.runs_per_p < 1 or self.numeric_repeats < 1:
            raise ConfigError("grid_points >= 3, runs_per_p >= 1, numeric_repeats >= 1 required")
        methods = tuple(m.strip().upper() for m in self.methods)
        for m in methods:
            try:
                SeedMethod(m)
            except ValueError:
                raise ConfigError(f"unknown method {m!r}") from None
        self.methods = methods


_TOP_FIELDS = [f for f in dataclasses.fields(RunConfig) if f.name not in ("generator", "ga")]
_SECTIONS = {"gen": GeneratorConfig, "ga": GAConfig}


def _format(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (tuple, list)):
        return ",".join(str(v) for v in value)
    if isinstance(value, DegreeModel):
        return value.value
    return repr(value) if isinstance(value, float) else str(value)


def _parse(raw: str, default: Any, name: str) -> Any:
    raw = raw.strip()
    if raw.lower() in ("none", "auto", ""):
        return None
    if isinstance(default, bool):
        if raw.lower() in ("true", "yes", "1", "on"):
            return True
        if raw.lower() in ("false", "no", "0", "off"):
            return False
        raise ConfigError(f"{name}: not a boolean: {raw!r}")
    if isinstance(default, tuple):
        return tuple(v.strip() for v in raw.split(",") if v.strip())
    try:
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {raw!r}") from None
    return raw


# fields whose default is None but which hold numbers
_NUMERIC_OPTIONAL = {"p": 0.0, "dd_p": 0.0, "realizations": 0, "workers": 0}


def serialize(config: RunConfig) -> str:
    lines = []
    for f in _TOP_FIELDS:
        lines.append(f"{f.name} = {_format(getattr(config, f.name))}")
    if config.generator is not None:
        for k, v in config.generator.to_dict().items():
            lines.append(f"gen.{k} = {_format(v)}")
    for k, v in config.ga.to_dict().items():
        lines.append(f"ga.{k} = {_format(v)}")
    return "\n".join(lines) + "\n"


def parse_pairs(text: str) -> dict[str, str]:
    pairs = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        pairs[key.strip()] = value.strip()
    return pairs


def from_pairs(pairs: dict[str, str], base: RunConfig | None = None) -> RunConfig:
    """Apply string key/value overrides onto ``base`` (or the defaults)."""
    top = {}
    sections: dict[str, dict[str, Any]] = {"gen": {}, "ga": {}}
    top_defaults = {f.name: f.default for f in _TOP_FIELDS}
    for key, raw in pairs.items():
        if "." in key:
            sec, name = key.split(".", 1)
            cls = _SECTIONS.get(sec)
            if cls is None or name not in {f.name for f in dataclasses.fields(cls)}:
                raise ConfigError(f"unknown key {key!r}")
            default = next(f.default for f in dataclasses.fields(cls) if f.name == name)
            sections[sec][name] = _parse(raw, default, key)
        else:
            if key not in top_defaults:
                raise ConfigError(f"unknown key {key!r}")
            default = _NUMERIC_OPTIONAL.get(key, top_defaults[key])
            if default is None:
                default = ""
            top[key] = _parse(raw, default, key)

    values = {f.name: getattr(base, f.name) for f in _TOP_FIELDS} if base else {}
    values.update(top)
    try:
        gen = base.generator if base else None
        if sections["gen"]:
            gen_base = gen.to_dict() if gen else {}
            gen_base.update(sections["gen"])
            gen = GeneratorConfig(**gen_base)
        if "graph" in top and top["graph"] is not None and not sections["gen"]:
            gen = None
        if sections["gen"] and "graph" not in top:
            values["graph"] = None
        ga = base.ga if base else GAConfig()
        if sections["ga"]:
            ga = GAConfig(**{**ga.to_dict(), **sections["ga"]})
        return RunConfig(generator=gen, ga=ga, **values)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def parse(text: str, base: RunConfig | None = None) -> RunConfig:
    return from_pairs(parse_pairs(text), base)
