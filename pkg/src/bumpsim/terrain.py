"""Gaussian-bump terrain: height, analytic slope, randomized track generation."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

DEFAULT_BUMP_HEIGHT = 0.008  # m, max bump height of the scaled-vehicle track


class InfeasibleSpec(ValueError):
    """Requested bump count/spacing cannot fit in the placement window."""


@dataclass(frozen=True)
class Bump:
    """Single Gaussian bump: g_j(x) = height * exp(-(x - center)^2 / (2 spread^2))."""

    height: float
    center: float
    spread: float

    def __post_init__(self):
        if not (self.height > 0.0):
            raise ValueError(f"bump height must be positive, got {self.height}")
        if not (self.spread > 0.0):
            raise ValueError(f"bump spread must be positive, got {self.spread}")


@dataclass(frozen=True)
class TerrainProfile:
    """Immutable road profile: a sum of Gaussian bumps over a finite track."""

    bumps: tuple[Bump, ...] = ()
    track_length: float = 10.0

    def __post_init__(self):
        object.__setattr__(self, "bumps", tuple(self.bumps))
        for b in self.bumps:
            if not (0.0 <= b.center <= self.track_length):
                raise ValueError(
                    f"bump center {b.center} outside track [0, {self.track_length}]"
                )

    def height(self, x: float) -> float:
        """Road elevation g(x) = sum_j H_j exp(-(x - mu_j)^2 / (2 sigma_j^2))."""
        total = 0.0
        for b in self.bumps:
            d = x - b.center
            total += b.height * math.exp(-d * d / (2.0 * b.spread * b.spread))
        return total

    def slope(self, x: float) -> float:
        """Analytic derivative g'(x)."""
        total = 0.0
        for b in self.bumps:
            d = x - b.center
            s2 = b.spread * b.spread
            total += -b.height * d / s2 * math.exp(-d * d / (2.0 * s2))
        return total

    @property
    def max_bump_height(self) -> float:
        return max((b.height for b in self.bumps), default=0.0)

    def to_json(self) -> str:
        doc = {
            "track_length": self.track_length,
            "bumps": [
                {"H": b.height, "mu": b.center, "sigma": b.spread} for b in self.bumps
            ],
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "TerrainProfile":
        doc = json.loads(text)
        bumps = tuple(
            Bump(height=b["H"], center=b["mu"], spread=b["sigma"])
            for b in doc["bumps"]
        )
        return cls(bumps=bumps, track_length=doc["track_length"])


@dataclass(frozen=True)
class TrackSpec:
    """Parameters for randomized track generation."""

    track_length: float = 10.0
    n_bumps: int = 3
    sigma_range: tuple[float, float] = (0.03, 0.08)
    min_spacing: float = 1.0
    placement_range: tuple[float, float] = (2.0, 9.0)
    bump_height: float = DEFAULT_BUMP_HEIGHT


def random_track(seed, spec: TrackSpec = TrackSpec()) -> TerrainProfile:
    """Deterministically generate a track with sorted, min-spaced bump centers.

    Accepts an int seed or a numpy Generator. Raises InfeasibleSpec when the
    placement window cannot hold n_bumps at min_spacing.
    """
    lo, hi = spec.placement_range
    n = spec.n_bumps
    if n == 0:
        return TerrainProfile(bumps=(), track_length=spec.track_length)
    slack = (hi - lo) - (n - 1) * spec.min_spacing
    if slack < 0.0:
        raise InfeasibleSpec(
            f"cannot place {n} bumps with spacing {spec.min_spacing} in "
            f"[{lo}, {hi}]"
        )
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    # Spacing transform: sorted uniforms on the slack interval plus mandatory
    # gaps give exact min-spacing without rejection sampling.
    offsets = np.sort(rng.uniform(0.0, slack, size=n))
    centers = lo + offsets + spec.min_spacing * np.arange(n)
    sigmas = rng.uniform(spec.sigma_range[0], spec.sigma_range[1], size=n)
    bumps = tuple(
        Bump(height=spec.bump_height, center=float(c), spread=float(s))
        for c, s in zip(centers, sigmas)
    )
    return TerrainProfile(bumps=bumps, track_length=spec.track_length)


FLAT = TerrainProfile(bumps=(), track_length=10.0)
