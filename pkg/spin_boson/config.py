"""
Loading of model configuration files.

A configuration is a flat YAML mapping validated into SpinBosonParams.
Command-line overrides are merged before validation so the same rules apply.
"""

import os
from pathlib import Path
from typing import Any, Dict, Iterable, Mapping, Optional

import yaml
from pydantic import ValidationError

from .models import DEFAULT_DENSE_LIMIT, SpinBosonParams


class ConfigError(Exception):
    """Raised when a configuration file or override is invalid."""
    pass


def parse_override(text: str) -> Dict[str, Any]:
    """Parse a KEY=VALUE override, typing the value with YAML rules."""
    if "=" not in text:
        raise ConfigError(f"Override must look like KEY=VALUE, got '{text}'")
    key, raw = text.split("=", 1)
    key = key.strip()
    if not key:
        raise ConfigError(f"Override has an empty key: '{text}'")
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as e:
        raise ConfigError(f"Cannot parse value of override '{key}': {e}")
    return {key: value}


def read_config(path) -> Dict[str, Any]:
    """Read a flat YAML mapping from disk."""
    config_path = Path(path)
    if not config_path.is_file():
        raise ConfigError(f"Config file not found: {config_path}")
    try:
        with open(config_path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigError(f"Config file {config_path} is not valid YAML: {e}")
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"Config file {config_path} must be a key-value mapping")
    nested = [key for key, value in data.items() if isinstance(value, (dict, list))]
    if nested:
        raise ConfigError(f"Config keys must hold scalar values: {', '.join(map(str, nested))}")
    return data


def _describe(error: Dict[str, Any]) -> str:
    key = ".".join(str(part) for part in error.get("loc", ())) or "<root>"
    if error.get("type") == "missing":
        return f"missing required config key '{key}'"
    if error.get("type") == "extra_forbidden":
        return f"unknown config key '{key}'"
    return f"invalid value for config key '{key}': {error.get('msg')}"


def params_from_mapping(data: Mapping[str, Any]) -> SpinBosonParams:
    """Validate a mapping into SpinBosonParams, naming offending keys on failure."""
    values = dict(data)
    if values.get("dense_limit") is None:
        env_limit = (os.getenv("GQME_DENSE_LIMIT") or "").strip()
        values["dense_limit"] = env_limit or DEFAULT_DENSE_LIMIT
    try:
        return SpinBosonParams.model_validate(values)
    except ValidationError as e:
        messages = [_describe(err) for err in e.errors()]
        raise ConfigError("; ".join(messages))


def load_params(
    path,
    overrides: Optional[Iterable[str]] = None,
    extra: Optional[Mapping[str, Any]] = None,
) -> SpinBosonParams:
    """Load a configuration file and apply overrides.

    Args:
        path: Path to the YAML configuration
        overrides: KEY=VALUE strings (from --set)
        extra: Already-typed overrides (from dedicated flags such as --rank)

    Returns:
        Validated SpinBosonParams

    Raises:
        ConfigError: If the file is missing, malformed, or fails validation
    """
    data = read_config(path)
    for text in overrides or ():
        data.update(parse_override(text))
    for key, value in (extra or {}).items():
        if value is not None:
            data[key] = value
    return params_from_mapping(data)
