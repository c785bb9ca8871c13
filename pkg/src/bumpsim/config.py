"""JSON run configuration: strict keys, documented defaults, resolved echo."""

from __future__ import annotations

import json

from .ddpg import AgentConfig
from .env import EpisodeConfig, RewardSpec
from .sensors import CameraSpec
from .terrain import Bump, TerrainProfile, TrackSpec
from .vehicle import VehicleParams


class ConfigError(ValueError):
    """Malformed or unknown configuration content."""


DEFAULTS = {
    "vehicle": {
        "m": 1.391, "inertia": 0.001897, "k1": 19.6, "k2": 19.6,
        "c1": 77.6, "c2": 77.6, "L1": 0.128, "L2": 0.128,
        "tau": 0.3, "u_max": 2.0,
    },
    "terrain": {
        "track_length": 10.0, "n_bumps": 3, "sigma_range": [0.03, 0.08],
        "min_spacing": 1.0, "placement_range": [2.0, 9.0],
        "bump_height": 0.008, "randomize": True,
        # fixed_bumps: list of {"H": ..., "mu": ..., "sigma": ...} pins the
        # track and overrides randomization.
        "fixed_bumps": None,
    },
    "camera": {"lookahead_max": 2.0, "lookahead_min": 0.2, "gain": 0.3},
    "reward": {
        "variant": "function_weighted", "w2": 75.0, "x_dot_d": 1.0,
        "threshold": 0.05, "slope": 100.0, "heavy_weight": 100.0,
    },
    "agent": {
        "actor_lr": 1e-4, "critic_lr": 1e-3, "gamma": 0.99, "batch_size": 64,
        "tau_soft": 1e-3, "buffer_capacity": 100000, "warmup_steps": 1000,
        "hidden_sizes": [64, 64], "noise_variance": 0.8, "noise_decay": 1e-4,
        "noise_floor": 0.01, "noise_mean_reversion": 0.15, "reward_scale": 0.01,
    },
    "episode": {"dt": 1.0 / 120.0, "max_steps": 3600, "initial_x_dot": 0.0},
    "train": {"episodes": 500, "seed": 0, "checkpoint_interval": 100},
}


def resolve(doc: dict) -> dict:
    """Merge a config document over DEFAULTS, rejecting unknown keys."""
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    resolved = {}
    for section, defaults in DEFAULTS.items():
        given = doc.get(section, {})
        if not isinstance(given, dict):
            raise ConfigError(f"section {section!r} must be an object")
        unknown = set(given) - set(defaults)
        if unknown:
            raise ConfigError(
                f"unknown keys in section {section!r}: {sorted(unknown)}"
            )
        resolved[section] = {**defaults, **given}
    unknown_sections = set(doc) - set(DEFAULTS)
    if unknown_sections:
        raise ConfigError(f"unknown config sections: {sorted(unknown_sections)}")
    return resolved


def load(path: str) -> dict:
    with open(path) as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid JSON in {path}: {e}") from e
    return resolve(doc)


def echo(resolved: dict, path: str):
    """Write the fully resolved config so the run is reproducible from it."""
    with open(path, "w") as f:
        json.dump(resolved, f, indent=2)
        f.write("\n")


def vehicle_params(resolved: dict) -> VehicleParams:
    return VehicleParams(**resolved["vehicle"])


def camera_spec(resolved: dict) -> CameraSpec:
    return CameraSpec(**resolved["camera"])


def reward_spec(resolved: dict) -> RewardSpec:
    return RewardSpec(**resolved["reward"])


def track_spec(resolved: dict) -> TrackSpec:
    t = resolved["terrain"]
    return TrackSpec(
        track_length=t["track_length"], n_bumps=t["n_bumps"],
        sigma_range=tuple(t["sigma_range"]), min_spacing=t["min_spacing"],
        placement_range=tuple(t["placement_range"]),
        bump_height=t["bump_height"],
    )


def fixed_track(resolved: dict) -> TerrainProfile | None:
    t = resolved["terrain"]
    if t["fixed_bumps"] is None:
        return None
    bumps = tuple(
        Bump(height=b["H"], center=b["mu"], spread=b["sigma"])
        for b in t["fixed_bumps"]
    )
    return TerrainProfile(bumps=bumps, track_length=t["track_length"])


def episode_config(resolved: dict) -> EpisodeConfig:
    e = resolved["episode"]
    return EpisodeConfig(
        dt=e["dt"], max_steps=e["max_steps"],
        track_spec=track_spec(resolved),
        fixed_track=fixed_track(resolved),
        randomize_track=resolved["terrain"]["randomize"],
        initial_x_dot=e["initial_x_dot"],
    )


def agent_config(resolved: dict) -> AgentConfig:
    a = dict(resolved["agent"])
    a["hidden_sizes"] = tuple(a["hidden_sizes"])
    return AgentConfig(u_max=resolved["vehicle"]["u_max"], **a)
