"""Plain-text ``key = value`` configuration files.

Blank lines and ``#`` comments are ignored.  Values are kept as strings;
typed access goes through the dataclass ``from_mapping`` helpers of the
consumers.
"""

from __future__ import annotations

import dataclasses
from pathlib import Path


class ConfigError(ValueError):
    def __init__(self, message, line=None, source="<config>"):
        self.line = line
        where = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(where + message)


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno, source)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError("empty key", lineno, source)
        if key in out:
            raise ConfigError(f"duplicate key {key!r}", lineno, source)
        out[key] = value
    return out


def parse_config(path) -> dict[str, str]:
    p = Path(path)
    return parse_config_text(p.read_text(), source=str(p))


def parse_window(s: str) -> tuple[float, float, float, float]:
    parts = [float(v) for v in s.replace(" ", "").split(",")]
    if len(parts) != 4:
        raise ValueError(f"window needs 4 comma-separated numbers, got {s!r}")
    a, b, c, d = parts
    if not (a < b and c < d):
        raise ValueError(f"window {s!r} is empty")
    return a, b, c, d


def parse_grid(s: str) -> tuple[int, int]:
    parts = s.lower().split("x")
    if len(parts) != 2:
        raise ValueError(f"grid must look like 65x65, got {s!r}")
    return int(parts[0]), int(parts[1])


def _convert(value: str, default):
    if isinstance(default, bool):
        if value.lower() in ("1", "true", "yes", "on"):
            return True
        if value.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {value!r}")
    if isinstance(default, int):
        return int(value)
    if isinstance(default, float):
        return float(value)
    if isinstance(default, tuple) and len(default) == 4:
        return parse_window(value)
    if isinstance(default, tuple):
        return tuple(v.strip() for v in value.split(",") if v.strip())
    return value


def fill_dataclass(cls, mapping: dict[str, str], source="<config>", strict=True):
    """Instantiate ``cls`` overriding defaults with converted ``mapping`` values."""
    fields = {f.name: f for f in dataclasses.fields(cls)}
    defaults = cls()
    kwargs = {}
    for key, value in mapping.items():
        if key not in fields:
            if strict:
                raise ConfigError(f"unknown key {key!r}", None, source)
            continue
        try:
            kwargs[key] = _convert(value, getattr(defaults, key))
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}", None, source) from exc
    return dataclasses.replace(defaults, **kwargs)
