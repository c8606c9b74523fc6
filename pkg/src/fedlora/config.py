"""Declarative run configuration: YAML/JSON files whose keys mirror SimConfig.

Unknown keys are rejected so typos fail fast instead of silently running
the defaults.
"""

from __future__ import annotations

import dataclasses
import os
from typing import Mapping

import yaml

from .orchestrator import SimConfig
from .task import TaskConfig


class ConfigError(ValueError):
    """Unreadable, unparsable, or invalid run configuration."""


def _build(cls, mapping: Mapping, context: str):
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(mapping) - known
    if unknown:
        raise ConfigError(f"unknown {context} keys: {sorted(unknown)}")
    try:
        return cls(**mapping)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {context}: {exc}") from exc


def sim_config_from_mapping(mapping: Mapping) -> SimConfig:
    if not isinstance(mapping, Mapping):
        raise ConfigError("config root must be a mapping")
    mapping = dict(mapping)
    task = mapping.pop("task", {})
    if not isinstance(task, Mapping):
        raise ConfigError("'task' must be a mapping")
    mapping["task"] = _build(TaskConfig, task, "task config")
    if isinstance(mapping.get("action_set"), list):
        mapping["action_set"] = tuple(mapping["action_set"])
    if isinstance(mapping.get("fixed_levels"), list):
        mapping["fixed_levels"] = tuple(mapping["fixed_levels"])
    return _build(SimConfig, mapping, "config")


def load_config(path: str | os.PathLike) -> SimConfig:
    """Parse a YAML (or JSON) config file into a validated SimConfig."""
    if not os.path.exists(path):
        raise ConfigError(f"no such config file: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if raw is None:
        raw = {}
    return sim_config_from_mapping(raw)


def config_to_mapping(cfg: SimConfig) -> dict:
    """Plain dict mirror of a SimConfig (enums as their string values)."""
    out = dataclasses.asdict(cfg)
    out["aggregator"] = cfg.aggregator.value
    out["estimation_source"] = cfg.estimation_source.value
    if isinstance(out.get("action_set"), tuple):
        out["action_set"] = list(out["action_set"])
    if isinstance(out.get("fixed_levels"), tuple):
        out["fixed_levels"] = list(out["fixed_levels"])
    return out
