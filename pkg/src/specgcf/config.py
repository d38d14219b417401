"""``key = value`` run configuration shared by the CLI subcommands."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

from .polybasis import FilterParams
from .training import TrainConfig


@dataclass
class RunConfig:
    # filter
    basis: str = "jacobi"
    order: int = 3
    a: float = 1.0
    b: float = 1.0
    alpha: float = 0.1
    discount: float = 1.0
    # optimisation
    embedding_dim: int = 64
    learning_rate: float = 0.001
    l2_lambda: float = 1e-6
    batch_size: int = 4096
    max_epochs: int = 300
    patience: int = 5
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    # evaluation / data
    eval_ks: tuple = (10, 20, 50)
    train_frac: float = 0.8
    valid_frac: float = 0.1

    def filter_params(self) -> FilterParams:
        return FilterParams(basis=self.basis, order=self.order, a=self.a, b=self.b,
                            alpha=self.alpha, discount=self.discount)

    def train_config(self) -> TrainConfig:
        names = {f.name for f in fields(TrainConfig)}
        return TrainConfig(**{k: v for k, v in dataclasses.asdict(self).items() if k in names})

    def replace(self, **changes) -> RunConfig:
        return dataclasses.replace(self, **changes)


def _coerce(name, default, raw: str):
    raw = raw.strip()
    if isinstance(default, bool):
        return raw.lower() in ("1", "true", "yes")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    if isinstance(default, tuple):
        return tuple(int(t) for t in raw.replace(" ", "").split(",") if t)
    return raw


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    base = base or RunConfig()
    defaults = dataclasses.asdict(base)
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected `key = value`")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in defaults:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _coerce(key, defaults[key], raw)
        except ValueError:
            raise ValueError(f"line {lineno}: bad value for {key}: {raw!r}") from None
    cfg = base.replace(**values)
    cfg.filter_params()  # validate
    cfg.train_config()
    return cfg


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text())


def format_config(cfg: RunConfig) -> str:
    lines = []
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if isinstance(value, tuple):
            value = ",".join(str(v) for v in value)
        lines.append(f"{f.name} = {value!r}" if isinstance(value, float) else f"{f.name} = {value}")
    return "\n".join(lines) + "\n"


def write_config(cfg: RunConfig, path) -> None:
    Path(path).write_text(format_config(cfg))
