"""Configuration objects and the TOML/JSON loader."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

try:  # Python 3.11+
    import tomllib as _toml
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as _toml


DEFAULT_ISR_REGEX = r"^(ISR|isr)_([0-9]+)$"


@dataclass(frozen=True)
class SimConfig:
    max_firings_per_isr: int = 1
    max_loop_iterations: int = 4
    max_traces: int = 100_000

    def __post_init__(self) -> None:
        for f in fields(self):
            if getattr(self, f.name) < 1:
                raise ValueError(f"{f.name} must be >= 1")


@dataclass(frozen=True)
class BackendConfig:
    kind: str = "oracle"  # http | replay | oracle
    endpoint: str | None = None
    model: str | None = None
    api_key_env: str = "AV_LLM_KEY"
    transcript_dir: str | None = None
    temperature: float = 0.0
    max_rounds: int = 3
    timeout_s: float = 120.0

    def __post_init__(self) -> None:
        if self.kind not in ("http", "replay", "oracle"):
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")

    @classmethod
    def from_env(cls, **overrides: Any) -> "BackendConfig":
        cfg = cls(
            kind=overrides.pop("kind", "http"),
            endpoint=os.environ.get("AV_LLM_ENDPOINT"),
            model=os.environ.get("AV_LLM_MODEL"),
        )
        return replace(cfg, **overrides)


@dataclass(frozen=True)
class AnalysisConfig:
    isr_regex: str = DEFAULT_ISR_REGEX
    # explicit name -> priority map; wins over the regex when given
    isr_priorities: dict[str, int] | None = None
    enable_intrinsic: str = "enable_isr"
    disable_intrinsic: str = "disable_isr"
    enable_aliases: tuple[str, ...] = ()
    disable_aliases: tuple[str, ...] = ()
    initial_irq_state: str = "enabled"
    context_budget: int = 24_000
    prompt_budget: int = 120_000
    history_budget: int = 16_000
    even_ratio: float = 2.0
    high_frequency_threshold: int = 8
    max_vars_per_group: int = 3
    prune_masked_candidates: bool = False
    sim: SimConfig = field(default_factory=SimConfig)
    backend: BackendConfig = field(default_factory=BackendConfig)

    def __post_init__(self) -> None:
        if self.initial_irq_state not in ("enabled", "disabled"):
            raise ValueError("initial_irq_state must be 'enabled' or 'disabled'")

    @property
    def enable_names(self) -> frozenset[str]:
        return frozenset((self.enable_intrinsic, *self.enable_aliases))

    @property
    def disable_names(self) -> frozenset[str]:
        return frozenset((self.disable_intrinsic, *self.disable_aliases))

    @property
    def intrinsic_names(self) -> frozenset[str]:
        return self.enable_names | self.disable_names


def config_from_mapping(data: dict[str, Any]) -> AnalysisConfig:
    data = dict(data)
    sim = SimConfig(**data.pop("sim", {}))
    backend = BackendConfig(**data.pop("backend", {}))
    for key in ("enable_aliases", "disable_aliases"):
        if key in data:
            data[key] = tuple(data[key])
    known = {f.name for f in fields(AnalysisConfig)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return AnalysisConfig(sim=sim, backend=backend, **data)


def load_config(path: str | os.PathLike[str] | None) -> AnalysisConfig:
    """Read a TOML or JSON config file; ``None`` gives the defaults."""
    if path is None:
        return AnalysisConfig()
    p = Path(path)
    raw = p.read_bytes()
    if p.suffix.lower() == ".json":
        data = json.loads(raw.decode("utf-8"))
    else:
        data = _toml.loads(raw.decode("utf-8"))
    return config_from_mapping(data)
