import pytest

from ahsim.config import apply_overrides, load_scenario


def small_scenario(*overrides, base="smart-metering", duration=600):
    """A built-in scenario shortened and tweaked with ``key=value`` overrides."""
    return apply_overrides(load_scenario(base), [f"duration={duration}", *overrides])


@pytest.fixture
def small():
    return small_scenario
