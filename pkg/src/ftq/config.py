"""Run configuration: JSON documents addressed as ``section.key``."""
from __future__ import annotations

import copy
import json
import math
from importlib import resources
from pathlib import Path

from .nmpc.cost import CostWeights
from .quadmodel import FaultStatus, QuadParams
from .simkit.config import KINDS, MismatchConfig, RecoveryCriterion, ScenarioConfig


class ConfigError(ValueError):
    pass


def default_config() -> dict:
    text = resources.files("ftq").joinpath("default_config.json").read_text()
    return json.loads(text)


def _set(cfg: dict, dotted: str, value):
    section, _, key = dotted.partition(".")
    if not key:
        raise ConfigError(f"expected section.key, got {dotted!r}")
    if section not in cfg or not isinstance(cfg[section], dict):
        raise ConfigError(f"unknown config section {section!r}")
    if key not in cfg[section]:
        raise ConfigError(f"unknown config key {dotted!r}")
    cfg[section][key] = value


def merge(base: dict, update: dict) -> dict:
    """Apply ``update`` (nested sections or flat ``section.key`` entries) onto a copy of ``base``."""
    out = copy.deepcopy(base)
    for k, v in update.items():
        if "." in k:
            _set(out, k, v)
        elif isinstance(v, dict):
            if k not in out:
                raise ConfigError(f"unknown config section {k!r}")
            for kk, vv in v.items():
                _set(out, f"{k}.{kk}", vv)
        else:
            raise ConfigError(f"top-level entry {k!r} must be a section")
    return out


def load_config(path=None, overrides=()) -> dict:
    """Defaults, then the file at ``path``, then ``key=value`` strings."""
    cfg = default_config()
    if path is not None:
        try:
            user = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigError("config root must be an object")
        cfg = merge(cfg, user)
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"override {item!r} is not key=value")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        _set(cfg, key.strip(), value)
    return cfg


def scenario_config(cfg: dict, kind: str, seed: int = 0) -> ScenarioConfig:
    if kind not in KINDS:
        raise ConfigError(f"unknown scenario {kind!r}")
    try:
        quad = QuadParams(**cfg["quad"])
        w = dict(cfg["weights"])
        factor = w.pop("terminal_factor", 2.0)
        weights = CostWeights.from_running(terminal_factor=factor, **w)
        sc = dict(cfg[kind])
        rotor = sc.pop("fault_rotor", None)
        fault = FaultStatus(rotor, float(sc.pop("fault_time", 0.0)))
        mm = cfg["mismatch"]
        mismatch = MismatchConfig(
            mass_error=float(mm["mass_error"]), cog_offset=tuple(mm["cog_offset"]),
            kappa_error=float(mm["kappa_error"]), external_torque=tuple(mm["external_torque"]),
            thrust_noise_std=float(mm["thrust_noise_std"]))
        kw = dict(
            kind=kind, fault=fault, seed=seed, quad=quad, weights=weights, mismatch=mismatch,
            recovery=RecoveryCriterion(**cfg["recovery"]),
            use_indi=bool(cfg["indi"]["enabled"]), indi_cutoff_hz=float(cfg["indi"]["cutoff_hz"]),
            **cfg["sim"], **cfg["nmpc"],
        )
        if kind == "lemniscate" and "duration" not in sc:
            sc["duration"] = sc["traj_start"] + 2 * math.pi / sc["omega"]
        kw.update(sc)
        return ScenarioConfig(**kw)
    except (TypeError, KeyError, ValueError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc
