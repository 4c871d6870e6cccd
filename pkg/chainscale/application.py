import logging
import os
from configparser import ConfigParser
from pathlib import Path
from typing import Optional
from chainscale.controllers import (
    BinPackController, DemandController, ExperimentController, MultiChainController, OfflineController,
    PrePlanController, ReportController, SingleChainController, TraceController
)
from chainscale.models import Scenario

PROJECT_ROOT = Path(os.path.dirname(os.path.dirname(os.path.realpath(__file__))))

DEFAULTS = {
    "logging": {
        "level": "INFO",
        "format": "%(asctime)s - %(name)s - %(message)s",
        "file": "",
    },
    "binpack": {"max_patterns": "100000", "max_nodes": "5000000", "cache_size": "4096"},
    "preplan": {"rate_unit_mbps": "1", "bound_factor": "10"},
    "ssc": {"seed": "0"},
    "msc": {"trim_surplus": "false"},
    "simulation": {"workers": "1", "database": "runs.db"},
    "synthetic": {
        "horizon": "1000",
        "slots_per_day": "24",
        "weekly_amplitude": "0.3",
        "noise_sigma": "0.25",
        "peak_mbps": "400000",
        "pmr": "4.27",
        "seed": "0",
    },
}


def load_settings(path: Optional[str | Path] = None) -> ConfigParser:
    """Runtime settings from config.cfg layered over the defaults.

    Parameters
    ----------
    path: str | Path | None
        Settings file; the project's config.cfg when omitted. A missing file
        leaves the defaults in place.

    Returns
    -------
    ConfigParser
        The merged settings
    """

    config = ConfigParser(interpolation=None)
    config.read_dict(DEFAULTS)
    config.read(path if path is not None else PROJECT_ROOT / "config.cfg")

    return config


def configure_logging(settings: ConfigParser) -> None:
    level = settings.get("logging", "level").upper()
    filename = settings.get("logging", "file") or None

    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format=settings.get("logging", "format"),
        filename=filename
    )


class ChainScale:
    """Facade over the controllers of one scenario.

    ``app("msc")`` returns the multi-chain controller, and so on for
    demand, binpack, preplan, ssc, offline, trace, experiment and report.
    """

    def __init__(self, scenario: Optional[Scenario] = None, settings: Optional[ConfigParser] = None):

        self._scenario = scenario
        self._settings = settings if settings is not None else load_settings()

        binpack = BinPackController(scenario, self._settings)

        self._controllers = {
            "demand": DemandController(scenario, self._settings),
            "binpack": binpack,
            "preplan": PrePlanController(scenario, self._settings, binpack),
            "ssc": SingleChainController(scenario, self._settings),
            "msc": MultiChainController(scenario, self._settings, binpack),
            "offline": OfflineController(scenario, self._settings),
            "trace": TraceController(scenario, self._settings),
            "experiment": ExperimentController(scenario, self._settings),
            "report": ReportController(scenario, self._settings)
        }

    @classmethod
    def from_file(cls, path: str | Path, settings: Optional[ConfigParser] = None) -> "ChainScale":
        return cls(Scenario.from_file(path), settings)

    @property
    def scenario(self) -> Optional[Scenario]:
        return self._scenario

    @property
    def settings(self) -> ConfigParser:
        return self._settings

    def __call__(self, *args, **kwargs):
        return self._controllers[args[0]]

    def __str__(self):
        name = self._scenario.name if self._scenario is not None else "no scenario"
        return f"ChainScale [{name}]"
