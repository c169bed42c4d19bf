import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def grid_plane(n=40, spacing=1.0, z=0.0):
    """Regular n x n grid on the plane z = const."""
    g = np.arange(n, dtype=np.float64) * spacing
    x, y = np.meshgrid(g, g)
    return np.column_stack([x.ravel(), y.ravel(), np.full(n * n, z)])


def sphere_patch(n=400, half_angle=0.35, seed=0):
    """Points on the unit sphere within ``half_angle`` of the +z pole."""
    rng = np.random.default_rng(seed)
    cos_max = np.cos(half_angle)
    u = rng.uniform(cos_max, 1.0, n)
    phi = rng.uniform(0, 2 * np.pi, n)
    s = np.sqrt(1 - u * u)
    return np.column_stack([s * np.cos(phi), s * np.sin(phi), u])


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(lines):
        terminalreporter.write_line(line)
