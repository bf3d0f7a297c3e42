"""Scenario/experiment configuration: file schema, defaults, overrides.

A single YAML (or JSON) document configures everything; the CLI layers
dotted-key overrides on top (file < env < flags). The full schema is
documented in docs/config.md. Unknown keys are rejected so typos fail
loudly instead of silently running defaults.
"""

from __future__ import annotations

import os
from dataclasses import fields, replace
from pathlib import Path
from typing import Any, Optional

import yaml

from .core_model import BlockLabel, Condition, ConfigError, ScenarioConfig
from .gaze_intent import DwellConfig
from .human_model import HumanParams, PickPolicy
from .robot_agent import RobotConfig
from .experiment import ExperimentConfig, ParticipantJitter
from .sim_engine import Scenario

ENV_CONFIG_PATH = "JAF_CONFIG"

_SECTIONS = {"scenario", "robot", "human", "dwell", "sim", "condition", "seed", "experiment", "server"}


def load_config_file(path: Optional[str | Path]) -> dict:
    """Load the config document; missing path means all defaults."""
    if path is None:
        path = os.environ.get(ENV_CONFIG_PATH)
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    data = yaml.safe_load(p.read_text(encoding="utf-8")) or {}
    if not isinstance(data, dict):
        raise ConfigError(f"config root must be a mapping, got {type(data).__name__}")
    unknown = set(data) - _SECTIONS
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)} (expected {sorted(_SECTIONS)})")
    return data


def apply_overrides(config: dict, overrides: list[str]) -> dict:
    """Apply `a.b.c=value` overrides; values parse as YAML scalars."""
    out = _deep_copy(config)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override must look like key.path=value, got {item!r}")
        key, _, raw = item.partition("=")
        node = out
        parts = key.strip().split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {key!r} descends into a non-mapping value")
        node[parts[-1]] = yaml.safe_load(raw)
    return out


def _deep_copy(d: dict) -> dict:
    return {k: _deep_copy(v) if isinstance(v, dict) else v for k, v in d.items()}


def _mean_jitter(section: dict, key: str, default_mean: float, default_jitter: float) -> tuple[float, float]:
    v = section.get(key)
    if v is None:
        return (section.get(f"{key}_mean", default_mean),
                section.get(f"{key}_jitter", default_jitter))
    if isinstance(v, dict):
        return v.get("mean", default_mean), v.get("jitter", default_jitter)
    return float(v), section.get(f"{key}_jitter", default_jitter)


def _build_dataclass(cls, section: dict, renames: Optional[dict] = None):
    renames = renames or {}
    known = {f.name for f in fields(cls)}
    kwargs = {}
    for key, value in section.items():
        name = renames.get(key, key)
        if name not in known:
            raise ConfigError(f"unknown {cls.__name__} option {key!r}")
        kwargs[name] = value
    return cls(**kwargs)


def build_scenario_config(section: dict) -> ScenarioConfig:
    zones = section.get("zones", [1, 2])
    if sorted(zones) != [1, 2]:
        raise ConfigError(f"exactly two zones labelled 1 and 2 are supported, got {zones}")
    if "blocks" in section:
        blocks = section["blocks"]
        ids = tuple(int(b["id"]) for b in blocks)
        labels = tuple(BlockLabel(int(b["label"])) for b in blocks)
        positions = tuple(tuple(float(x) for x in b["pos"]) for b in blocks)
        cfg = ScenarioConfig(n_blocks=len(blocks), labels=labels, positions=positions, block_ids=ids)
    else:
        labels = section.get("labels")
        positions = section.get("positions_cm")
        unknown = set(section) - {"n_blocks", "labels", "positions_cm", "zones"}
        if unknown:
            raise ConfigError(f"unknown scenario options: {sorted(unknown)}")
        cfg = ScenarioConfig(
            n_blocks=int(section.get("n_blocks", 15)),
            labels=tuple(BlockLabel(int(v)) for v in labels) if labels else None,
            positions=tuple(tuple(float(x) for x in p) for p in positions) if positions else None,
        )
    cfg.resolved()  # validate eagerly
    return cfg


def build_scenario(config: dict, condition: Optional[str] = None, seed: Optional[int] = None) -> Scenario:
    """Assemble a full simulation scenario from the config document."""
    scenario_cfg = build_scenario_config(config.get("scenario", {}))
    robot = _build_dataclass(RobotConfig, config.get("robot", {}), renames={"return": "return_home"})

    human_section = dict(config.get("human", {}))
    for key, (dm, dj) in {"reach_time": (2.0, 0.5), "place_time": (2.0, 0.5),
                          "scan_time": (40.0, 12.0), "rescan_time": (4.0, 1.0)}.items():
        if isinstance(human_section.get(key), dict):
            mean, jitter = _mean_jitter(human_section, key, dm, dj)
            human_section[key] = mean
            human_section.setdefault(key.replace("_time", "_jitter") if key.endswith("_time") else f"{key}_jitter", jitter)
    if "pick_policy" in human_section:
        human_section["pick_policy"] = PickPolicy(human_section["pick_policy"])
    human = _build_dataclass(HumanParams, human_section)

    dwell = _build_dataclass(DwellConfig, config.get("dwell", {}))
    sim = config.get("sim", {})
    cond_name = condition or config.get("condition", "both")
    master_seed = seed if seed is not None else int(config.get("seed", 0))
    return Scenario(
        workspace=scenario_cfg,
        robot=robot,
        human=human,
        dwell=dwell,
        condition=Condition.from_name(cond_name),
        master_seed=master_seed,
        recovery_delay=float(sim.get("recovery_delay", 5.0)),
        time_limit=float(sim.get("time_limit", 3600.0)),
        confirm_menu=bool(sim.get("confirm_menu", True)),
    )


def build_experiment(config: dict, participants: Optional[int] = None,
                     seed: Optional[int] = None) -> ExperimentConfig:
    base = build_scenario(config)
    exp = config.get("experiment", {})
    jitter = _build_dataclass(ParticipantJitter, exp.get("jitter", {}))
    return ExperimentConfig(
        n_participants=participants if participants is not None else int(exp.get("participants", 37)),
        base=base,
        jitter=jitter,
        master_seed=seed if seed is not None else int(config.get("seed", 0)),
    )


def server_settings(config: dict) -> dict:
    server = dict(config.get("server", {}))
    server.setdefault("port", 8090)
    server.setdefault("host", "127.0.0.1")
    server.setdefault("tick_rate", 30.0)
    server.setdefault("trace_dir", "traces")
    return server
