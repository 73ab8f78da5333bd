"""Flat key=value run configuration."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields

from .model import ModelConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-3
    weight_decay: float = 1e-5
    batch_size: int = 32
    epochs: int = 100
    seed: int = 0
    metric: str = "auto"          # auto | prc (binary tasks only)

    def __post_init__(self):
        if self.lr < 0 or self.weight_decay < 0:
            raise ConfigError("lr and weight_decay must be non-negative")
        if self.batch_size < 1 or self.epochs < 0:
            raise ConfigError("batch_size must be positive and epochs non-negative")
        if self.metric not in ("auto", "prc"):
            raise ConfigError(f"unknown metric {self.metric!r}")


@dataclass(frozen=True)
class RunConfig:
    model: ModelConfig
    train: TrainConfig
    task_type: str = "auto"       # auto | REGRESSION | BINARY_MULTITASK

    def to_dict(self) -> dict:
        return {"model": self.model.to_dict(), "train": asdict(self.train),
                "task_type": self.task_type}


_MODEL_KEYS = {f.name: f.type for f in fields(ModelConfig)}
_TRAIN_KEYS = {f.name: f.type for f in fields(TrainConfig)}
# set from the dataset, never from the file
_DERIVED = {"n_tasks", "task_type"}


def _coerce(key: str, text: str, default):
    if isinstance(default, bool):
        low = text.lower()
        if low in ("1", "true", "yes"):
            return True
        if low in ("0", "false", "no"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {text!r}")
    try:
        return type(default)(text)
    except ValueError:
        raise ConfigError(f"{key}: cannot read {text!r} as {type(default).__name__}") from None


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    """Parse lines of key=value; '#' starts a comment; unknown keys are an error.

    seed sets both the parameter initialization and the training order.
    """
    model_defaults, train_defaults = ModelConfig(), TrainConfig()
    model_kw, train_kw, task_type = {}, {}, "auto"
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source} line {lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key == "task_type":
            task_type = value
            continue
        if key in _TRAIN_KEYS:
            train_kw[key] = _coerce(key, value, getattr(train_defaults, key))
            if key == "seed":
                model_kw["seed"] = train_kw["seed"]
        elif key in _MODEL_KEYS and key not in _DERIVED:
            model_kw[key] = _coerce(key, value, getattr(model_defaults, key))
        else:
            raise ConfigError(f"{source} line {lineno}: unknown key {key!r}")
    if task_type not in ("auto", "REGRESSION", "BINARY_MULTITASK"):
        raise ConfigError(f"{source}: unknown task_type {task_type!r}")
    try:
        return RunConfig(ModelConfig(**model_kw), TrainConfig(**train_kw), task_type)
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_config(path: str) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), path)
