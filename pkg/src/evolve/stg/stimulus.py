"""Width-constrained stimulus planning.

Control inputs narrow enough are enumerated exhaustively; wider ones and all
datapath buses get seeded random values, with datapath corner patterns first.
"""

from __future__ import annotations

import enum
import itertools
import math
import random
from dataclasses import dataclass, field

from .ports import Category, Port

W_EXHAUSTIVE_MAX = 8
DEFAULT_RANDOM_VECTORS = 16
DEFAULT_MAX_CHECKS = 512


class Mode(str, enum.Enum):
    EXHAUSTIVE = "exhaustive"
    CONSTRAINED_RANDOM = "constrained-random"


@dataclass(frozen=True)
class ControlStimulus:
    name: str
    width: int
    mode: Mode
    count: int


def corner_patterns(width: int) -> tuple[int, ...]:
    """Zero, all-ones, 0xAA.. and 0x55.. truncated to ``width`` bits."""
    mask = (1 << width) - 1
    alt_hi = int("10" * ((width + 1) // 2), 2)
    alt_lo = int("01" * ((width + 1) // 2), 2)
    return (0, mask, alt_hi & mask, alt_lo & mask)


@dataclass(frozen=True)
class StimulusPlan:
    controls: tuple[ControlStimulus, ...]
    datapath: tuple[tuple[str, int], ...]
    corner_seeds: dict[str, tuple[int, ...]] = field(hash=False)
    random_vectors: int = DEFAULT_RANDOM_VECTORS
    seed: int = 0
    max_checks: int = DEFAULT_MAX_CHECKS

    def vectors(self) -> list[dict[str, int]]:
        """Expand the plan into the ordered list of input assignments.

        Control values form the outer loop and datapath rows the inner loop.
        When the full outer product would blow the check cap, the outer loop
        degrades to a covering sequence that still walks every value of each
        exhaustive control signal.
        """
        rng = random.Random(self.seed)
        control_values = []
        for c in self.controls:
            if c.mode is Mode.EXHAUSTIVE:
                control_values.append(list(range(1 << c.width)))
            else:
                control_values.append([rng.getrandbits(c.width) for _ in range(c.count)])

        outer_len = math.prod(len(v) for v in control_values)
        n_corners = 4 if self.datapath else 0
        inner = n_corners + self.random_vectors if self.datapath else 1

        if outer_len * inner <= self.max_checks:
            outer = [dict(zip((c.name for c in self.controls), combo))
                     for combo in itertools.product(*control_values)]
        elif self.datapath and outer_len * n_corners <= self.max_checks:
            outer = [dict(zip((c.name for c in self.controls), combo))
                     for combo in itertools.product(*control_values)]
            inner = self.max_checks // outer_len
        else:
            rows = max(len(v) for v in control_values)
            outer = [{c.name: vals[r % len(vals)] for c, vals in zip(self.controls, control_values)}
                     for r in range(rows)]
            inner = max(1, self.max_checks // rows)

        out: list[dict[str, int]] = []
        for k, combo in enumerate(outer):
            for j in range(inner):
                row = dict(combo)
                if inner >= n_corners:
                    corner = j if j < n_corners else None
                else:
                    corner = (k * inner + j) % n_corners
                for name, width in self.datapath:
                    if corner is not None:
                        row[name] = self.corner_seeds[name][corner]
                    else:
                        row[name] = rng.getrandbits(width)
                out.append(row)
        return out[: self.max_checks]


def plan_stimulus(
    ports: list[Port],
    random_vectors: int = DEFAULT_RANDOM_VECTORS,
    seed: int = 0,
    w_exhaustive_max: int = W_EXHAUSTIVE_MAX,
    max_checks: int = DEFAULT_MAX_CHECKS,
) -> StimulusPlan:
    if any(p.category is None for p in ports):
        raise ValueError("classify ports before planning stimulus")
    controls, datapath = [], []
    for p in ports:
        if p.category is Category.CONTROL:
            if p.width <= w_exhaustive_max:
                controls.append(ControlStimulus(p.name, p.width, Mode.EXHAUSTIVE, 1 << p.width))
            else:
                controls.append(ControlStimulus(p.name, p.width, Mode.CONSTRAINED_RANDOM, random_vectors))
        elif p.category is Category.DATAPATH:
            datapath.append((p.name, p.width))
    widest = max((c.count for c in controls if c.mode is Mode.EXHAUSTIVE), default=0)
    if widest > max_checks:
        raise ValueError(f"check cap {max_checks} cannot cover a {widest}-value control signal")
    return StimulusPlan(
        controls=tuple(controls),
        datapath=tuple(datapath),
        corner_seeds={name: corner_patterns(w) for name, w in datapath},
        random_vectors=random_vectors,
        seed=seed,
        max_checks=max_checks,
    )
