"""Shared fixtures: random instance generators and reference systems."""

import numpy as np
import pytest

from oneshot import BroadcastSystem, Joint, Kernel
from oneshot.broadcast import product_extend_system


def pytest_runtest_logreport(report):
    # one visible line per acceptance criterion
    if report.when == "call" and "test_acceptance" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        outcome = "PASS" if report.passed else ("FAIL" if report.failed else "SKIP")
        print(f"\n[acceptance] {name}: {outcome}", flush=True)


def random_dist(rng: np.random.Generator, k: int, allow_zero: bool = False) -> np.ndarray:
    p = rng.dirichlet(np.ones(k))
    if allow_zero and k > 2 and rng.random() < 0.3:
        p[rng.integers(k)] = 0.0
        p /= p.sum()
    return p


def random_joint(rng: np.random.Generator, shape, allow_zero: bool = False) -> Joint:
    p = rng.dirichlet(np.ones(int(np.prod(shape)))).reshape(shape)
    if allow_zero and rng.random() < 0.3:
        idx = tuple(rng.integers(s) for s in shape)
        p[idx] = 0.0
        p /= p.sum()
    return Joint(p)


def random_event(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.random(shape) < rng.uniform(0.2, 0.8)


def binary_broadcast_system() -> BroadcastSystem:
    """Binary system: x = u xor s xor t through a BSC(0.1) x BSC(0.2) pair."""
    p_ust = [[[0.15, 0.05], [0.05, 0.20]], [[0.10, 0.08], [0.07, 0.30]]]
    x_map = np.zeros((2, 2, 2), dtype=int)
    for u in range(2):
        for s in range(2):
            for t in range(2):
                x_map[u, s, t] = u ^ s ^ t
    rows = np.zeros((2, 2, 2))
    for x in range(2):
        for y1 in range(2):
            for y2 in range(2):
                rows[x, y1, y2] = (0.9 if y1 == x else 0.1) * (0.8 if y2 == x else 0.2)
    return BroadcastSystem(Joint(p_ust), x_map, Kernel(rows))


def asym_broadcast_system() -> BroadcastSystem:
    """S and T drive separate components with symbol-dependent noise, so the
    encoder's objective varies across codeword triples."""
    p_ust = [[[0.28, 0.07], [0.05, 0.20]], [[0.12, 0.08], [0.06, 0.14]]]
    x_map = np.zeros((2, 2, 2), dtype=int)
    for u in range(2):
        for s in range(2):
            for t in range(2):
                x_map[u, s, t] = 2 * s + t
    rows = np.zeros((4, 2, 2))
    for x in range(4):
        s, t = x // 2, x % 2
        f1 = 0.05 if s == 0 else 0.25
        f2 = 0.10 if t == 0 else 0.30
        for y1 in range(2):
            for y2 in range(2):
                rows[x, y1, y2] = ((1 - f1) if y1 == s else f1) * ((1 - f2) if y2 == t else f2)
    return BroadcastSystem(Joint(p_ust), x_map, Kernel(rows))


def noiseless_broadcast_system() -> BroadcastSystem:
    """Each receiver observes its own layer and the cloud symbol exactly."""
    p_ust = np.array([[[0.10, 0.15], [0.12, 0.08]], [[0.20, 0.05], [0.13, 0.17]]])
    x_map = np.zeros((2, 2, 2), dtype=int)
    rows = np.zeros((8, 4, 4))
    for u in range(2):
        for s in range(2):
            for t in range(2):
                x = 4 * u + 2 * s + t
                x_map[u, s, t] = x
                rows[x, 2 * u + s, 2 * u + t] = 1.0
    return BroadcastSystem(Joint(p_ust), x_map, Kernel(rows))


@pytest.fixture(scope="session")
def binary_system():
    return binary_broadcast_system()


@pytest.fixture(scope="session")
def asym_system():
    return asym_broadcast_system()


@pytest.fixture(scope="session")
def asym_ext_system():
    return product_extend_system(asym_broadcast_system(), 3)


@pytest.fixture(scope="session")
def noiseless_system():
    return noiseless_broadcast_system()
