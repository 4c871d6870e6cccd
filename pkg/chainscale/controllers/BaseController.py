import logging
from configparser import ConfigParser
from typing import Optional
from chainscale.errors import ConfigurationError
from chainscale.models import Scenario


class BaseController:
    """Base controller encapsulates common functionality for all controllers

    Attributes
    ----------
    _scenario : Scenario | None
        The scenario the controller operates on
    _settings : ConfigParser
        The runtime settings read from config.cfg
    _logger : logging.Logger
        Logger named after the concrete controller module
    """

    _scenario = None
    _settings = None

    def __init__(self, scenario: Optional[Scenario], settings: ConfigParser):
        """Initialize the class"""

        self._scenario = scenario
        self._settings = settings
        self._logger = logging.getLogger(self.__class__.__module__)

    @property
    def scenario(self) -> Scenario:

        if self._scenario is None:
            raise ConfigurationError(
                f"{self.__class__.__name__} needs a scenario; load one with --config."
            )

        return self._scenario
