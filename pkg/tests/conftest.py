"""Shared fixtures and independent reference implementations (oracles).

The oracles here are deliberately written as plain loops, separate from the
library's vectorized code paths, so that agreement between the two is a
meaningful check rather than a tautology.
"""

from __future__ import annotations

import numpy as np
import pytest

from rpointhop import HopConfig, ModelConfig, train
from rpointhop.bench import make_shape_corpus


# ---------------------------------------------------------------------------
# oracles
# ---------------------------------------------------------------------------


def knn_oracle(points: np.ndarray, query: np.ndarray, k: int):
    """Brute-force scan: ascending distance, ties by ascending index."""
    d2 = []
    for j in range(points.shape[0]):
        dx = points[j, 0] - query[0]
        dy = points[j, 1] - query[1]
        dz = points[j, 2] - query[2]
        d2.append(dx * dx + dy * dy + dz * dz)
    order = sorted(range(len(d2)), key=lambda j: (d2[j], j))[:k]
    return np.asarray(order, dtype=np.intp), np.sqrt(np.asarray([d2[j] for j in order]))


def fps_oracle(points: np.ndarray, m: int, start: int = 0) -> np.ndarray:
    """Greedy max-min selection; max-distance ties go to the lowest index."""
    n = points.shape[0]
    selected = [start]
    min_d2 = np.empty(n)
    for j in range(n):
        d = points[j] - points[start]
        min_d2[j] = d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
    for _ in range(1, m):
        best, best_d2 = 0, -1.0
        for j in range(n):
            if min_d2[j] > best_d2:  # strict: ties keep the lower index
                best, best_d2 = j, min_d2[j]
        selected.append(best)
        for j in range(n):
            d = points[j] - points[best]
            d2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
            if d2 < min_d2[j]:
                min_d2[j] = d2
    return np.asarray(selected, dtype=np.intp)


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniform-ish proper rotation via QR of a Gaussian matrix."""
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


# ---------------------------------------------------------------------------
# fixtures
# ---------------------------------------------------------------------------

TINY_CONFIG = ModelConfig(
    hops=(HopConfig(192, 24), HopConfig(128, 16)),
    k_lrf=16,
    energy_threshold=0.001,
    seed=0,
)

# final hop keeps 256 points so the CLI's default correspondence count
# (m1 = 256) is satisfiable
CLI_CONFIG = ModelConfig(
    hops=(HopConfig(384, 24), HopConfig(256, 16)),
    k_lrf=24,
    energy_threshold=0.001,
    seed=0,
)


@pytest.fixture(scope="session")
def tiny_corpus():
    return make_shape_corpus(8, 256, seed=5)


@pytest.fixture(scope="session")
def tiny_model(tiny_corpus):
    return train(tiny_corpus, TINY_CONFIG)


@pytest.fixture(scope="session")
def cli_corpus():
    return make_shape_corpus(6, 512, seed=11)


@pytest.fixture(scope="session")
def cli_model(cli_corpus):
    return train(cli_corpus, CLI_CONFIG)
