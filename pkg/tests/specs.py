"""Seeded random two-slope specs shared by the unit and acceptance tests."""
from __future__ import annotations

import cmath

import numpy as np

from qsum.system import SystemSpec, sigma_forbidden
from qsum.transforms import Direction, Slope

TYPES = [(1, 1, 1), (1, 2, 1), (2, 1, 2), (1, 2, 2), (3, 2, 1)]


def random_spec(rng: np.random.Generator, n: int, d: int, r: int) -> tuple[SystemSpec, Direction]:
    """|q| in [1.3, 1.4], |a| in [0.5, 1], W in the unit box, lam with margin > 0.1 to Sigma."""
    q = cmath.rect(rng.uniform(1.3, 1.4), rng.uniform(-0.3, 0.3))
    a = cmath.rect(rng.uniform(0.5, 1.0), rng.uniform(-np.pi, np.pi))
    W = tuple(tuple(complex(*rng.uniform(-1, 1, 2)) for _ in range(n)) for _ in range(d * r))
    spec = SystemSpec(q, Slope(n, d), a, r, W)
    while True:
        lam = cmath.rect(rng.uniform(0.7, 1.3), rng.uniform(-np.pi, np.pi))
        direction = Direction(lam, d)
        if sigma_forbidden(direction, spec)[1] > 0.1:
            return spec, direction


def acceptance_specs(seed: int = 20240611) -> list[tuple[SystemSpec, Direction]]:
    """Ten specs, two of each (n, d, r) type."""
    rng = np.random.default_rng(seed)
    return [random_spec(rng, *t) for t in TYPES for _ in range(2)]
