"""Flat ``key = value`` run configuration.

Lines are ``key = value`` (or ``key: value``); ``#`` starts a comment. A
config file must give every model parameter. Run keys (``N``, ``scheme``,
``seed``, ``format``, ``out``) are optional.
"""

from __future__ import annotations

from .model import PARAM_KEYS, ModelParams

RUN_KEYS = ("N", "scheme", "seed", "format", "out")


class ConfigError(ValueError):
    """Unreadable or incomplete configuration (CLI exit code 2)."""


def parse_text(text: str, source: str = "<config>") -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        sep = "=" if "=" in line else ":" if ":" in line else None
        if sep is None:
            raise ConfigError(f"{source}:{lineno}: expected key = value, got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split(sep, 1))
        if key not in PARAM_KEYS and key not in RUN_KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in out:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def load(path: str) -> dict[str, str]:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc.strerror}") from exc
    return parse_text(text, path)


def params_from_mapping(mapping: dict[str, str]) -> dict[str, float]:
    """Every parameter key as a float; names the first missing key."""
    values = {}
    for key in PARAM_KEYS:
        if key not in mapping:
            raise ConfigError(f"missing required key {key!r}")
        try:
            values[key] = float(mapping[key])
        except ValueError as exc:
            raise ConfigError(f"key {key!r}: not a number: {mapping[key]!r}") from exc
    return values


def dump(params: ModelParams, extra: dict | None = None) -> str:
    """Config-file text that reproduces ``params`` (and optional run keys)."""
    lines = [f"{k} = {v!r}" for k, v in params.as_config().items()]
    for k, v in (extra or {}).items():
        lines.append(f"{k} = {v}")
    return "\n".join(lines) + "\n"
