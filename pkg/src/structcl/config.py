"""Flat ``key = value`` run configuration.

Keys are the :class:`~structcl.pipeline.TrainConfig` fields plus the dataset
paths below. ``#`` starts a comment. Unknown keys are rejected.
"""
from __future__ import annotations

import os
import typing
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .errors import ConfigError, ParseError
from .pipeline import TrainConfig

PATH_KEYS = ("edges", "attrs", "labels", "mined")
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _coerce(key, raw, kind):
    try:
        if kind is bool:
            low = raw.lower()
            if low in _TRUE:
                return True
            if low in _FALSE:
                return False
            raise ValueError(raw)
        return kind(raw)
    except ValueError:
        raise ConfigError(f"config key {key!r}: cannot read {raw!r} as {kind.__name__}") from None


@dataclass(frozen=True)
class RunConfig:
    train: TrainConfig
    edges: str | None = None
    attrs: str | None = None
    labels: str | None = None
    mined: str | None = None

    def to_text(self, relative_to=None) -> str:
        """Config file text; with ``relative_to`` (the directory the file will live
        in) relative paths are rewritten so the file loads back from there."""
        lines = [f"{k} = {v}" for k, v in asdict(self.train).items()]
        for k in PATH_KEYS:
            v = getattr(self, k)
            if not v:
                continue
            if relative_to is not None and not Path(v).is_absolute():
                v = os.path.relpath(v, relative_to)
            lines.append(f"{k} = {v}")
        return "\n".join(lines) + "\n"


def _train_types():
    hints = typing.get_type_hints(TrainConfig)
    return {f.name: hints[f.name] for f in fields(TrainConfig)}


def parse_config_text(text: str, source="<config>") -> dict:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.split("#", 1)[0].strip()
        if not s:
            continue
        if "=" not in s:
            raise ParseError(source, lineno, f"expected 'key = value', got {s!r}")
        key, val = (t.strip() for t in s.split("=", 1))
        if not key:
            raise ParseError(source, lineno, "empty key")
        values[key] = val
    return values


def resolve(values: dict, overrides: dict | None = None, base_dir=None) -> RunConfig:
    """Merge file values with overrides (already-typed or raw strings).

    Relative paths from ``values`` are taken against ``base_dir``; paths given
    as overrides are left as the caller wrote them.
    """
    types = _train_types()
    merged = dict(values)
    if base_dir is not None:
        for k in PATH_KEYS:
            v = merged.get(k)
            if v not in (None, "", "None") and not Path(v).is_absolute():
                merged[k] = str(Path(base_dir) / v)
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    unknown = sorted(set(merged) - set(types) - set(PATH_KEYS))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    train = {}
    for k, kind in types.items():
        if k in merged:
            v = merged[k]
            train[k] = _coerce(k, v, kind) if isinstance(v, str) and kind is not str else v
    paths = {}
    for k in PATH_KEYS:
        v = merged.get(k)
        if v in (None, "", "None"):
            continue
        paths[k] = str(Path(v))
    return RunConfig(TrainConfig(**train), **paths)


def load_config(path, overrides=None) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    return resolve(parse_config_text(path.read_text(), path), overrides, base_dir=path.parent)
