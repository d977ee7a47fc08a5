import math

import numpy as np
import pytest
from hypothesis import settings

from topostring.config import Chirality, ModeSpec, StringConfiguration

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

R, L = Chirality.RIGHT, Chirality.LEFT
TWO_PI = 2.0 * math.pi


def make_cfg(*modes, dimension=4, **kw):
    specs = [m if isinstance(m, ModeSpec) else ModeSpec(*m) for m in modes]
    return StringConfiguration(dimension=dimension, modes=tuple(specs), **kw)


def two_mode(k, l, r, rt, parallel=True, gamma=0.0, gamma_t=0.0, **kw):
    return make_cfg(
        ModeSpec(2, k, r, gamma, R),
        ModeSpec(2 if parallel else 3, l, rt, gamma_t, L),
        **kw,
    )


def random_cfg(rng, n_modes, dimension=6, **kw):
    """Random valid configuration with distinct (direction, harmonic, chirality)."""
    keys = set()
    modes = []
    while len(modes) < n_modes:
        key = (int(rng.integers(2, dimension)), int(rng.integers(1, 5)), R if rng.random() < 0.5 else L)
        if key in keys:
            continue
        keys.add(key)
        modes.append(ModeSpec(key[0], key[1], float(rng.uniform(0.2, 2.0)), float(rng.uniform(0, TWO_PI)), key[2]))
    zero = {I: float(rng.normal()) for I in range(2, dimension)}
    centers = {I: float(rng.normal()) for I in range(2, dimension)}
    return StringConfiguration(dimension=dimension, zero_modes=zero, centers=centers, modes=tuple(modes), **kw)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[criterion] = (bool(ok), detail)
    print(f"criterion {criterion}: {'PASS' if ok else 'FAIL'} ({detail})")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} ({detail})")
