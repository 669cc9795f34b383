"""Plain ``key = value`` configuration with typed accessors."""

from __future__ import annotations

import configparser
from importlib import resources
from pathlib import Path

__all__ = ["Config", "load_config", "DEFAULT_CONFIG"]

DEFAULT_CONFIG = "default.cfg"


class Config:
    def __init__(self, values: dict[str, str], source: str):
        self.values = dict(values)
        self.source = source

    def __contains__(self, key: str) -> bool:
        return key in self.values

    def raw(self, key: str) -> str:
        try:
            return self.values[key]
        except KeyError:
            raise KeyError(f"missing configuration key {key!r} in {self.source}") from None

    def int(self, key: str) -> int:
        return int(self.raw(key))

    def float(self, key: str) -> float:
        return float(self.raw(key))

    def ints(self, key: str) -> list[int]:
        return [int(t) for t in self.raw(key).split(",") if t.strip()]

    def floats(self, key: str) -> list[float]:
        return [float(t) for t in self.raw(key).split(",") if t.strip()]

    def updated(self, **overrides) -> "Config":
        vals = dict(self.values)
        vals.update({k: str(v) for k, v in overrides.items()})
        return Config(vals, self.source + " (overridden)")


def _parse(text: str, source: str) -> dict[str, str]:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    parser.optionxform = str
    parser.read_string("[config]\n" + text, source=source)
    return dict(parser["config"])


def load_config(path: str | Path | None = None) -> Config:
    """The packaged defaults, overlaid with ``path`` when given."""
    text = resources.files("quadlevel").joinpath("data", DEFAULT_CONFIG).read_text()
    values = _parse(text, DEFAULT_CONFIG)
    source = DEFAULT_CONFIG
    if path is not None:
        values.update(_parse(Path(path).read_text(), str(path)))
        source = str(path)
    return Config(values, source)
