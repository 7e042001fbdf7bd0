"""Discrete-event simulator of the IEEE 802.11ah MAC for dense M2M sensor networks.

Typical use::

    from ahsim import load_scenario, run
    report = run(load_scenario("smart-metering"), seed=3)
    print(report.ul.pdr, report.ul.pdd_s)
"""

__version__ = "0.1.0"

from .config import ScenarioConfig, load_scenario  # noqa: E402
from .engine import Simulation, run  # noqa: E402

__all__ = ["ScenarioConfig", "Simulation", "load_scenario", "run", "__version__"]
