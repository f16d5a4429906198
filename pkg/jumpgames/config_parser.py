import os

import yaml
from dotenv import load_dotenv

from core import parse_rational
from dynamics import POLICIES, POLICY_ALIASES, PotentialConfig
from errors import ConfigError

DEFAULTS = {
    "dynamics": {"m": "1/4", "max_steps": 10000, "policy": "first", "seed": 0},
    "search": {"budget": 1000000, "irc_budget": 1000000},
    "logging": {"level": "INFO"},
    "output": {"decimals": 4},
}

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


class Config(dict):

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        for section, values in DEFAULTS.items():
            merged = dict(values)
            merged.update(self.get(section) or {})
            self[section] = merged
        self.validate()

    def validate(self):
        """Check every setting the command line reads; raise ConfigError on the first bad one."""
        try:
            self.potential = PotentialConfig(parse_rational(self["dynamics"]["m"]))
        except ValueError as e:
            raise ConfigError(f"dynamics.m: {e}") from e
        policy = POLICY_ALIASES.get(self["dynamics"]["policy"], self["dynamics"]["policy"])
        if policy not in POLICIES:
            raise ConfigError(f"dynamics.policy must be one of {POLICIES}, got {policy!r}")
        self["dynamics"]["policy"] = policy
        for section, key in (("dynamics", "max_steps"), ("search", "budget"), ("search", "irc_budget")):
            value = self[section][key]
            if not isinstance(value, int) or isinstance(value, bool) or value <= 0:
                raise ConfigError(f"{section}.{key} must be a positive integer, got {value!r}")
        seed = self["dynamics"]["seed"]
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise ConfigError(f"dynamics.seed must be an integer, got {seed!r}")
        level = str(self["logging"]["level"]).upper()
        if level not in LOG_LEVELS:
            raise ConfigError(f"logging.level must be one of {LOG_LEVELS}, got {level!r}")
        self["logging"]["level"] = level
        decimals = self["output"]["decimals"]
        if not isinstance(decimals, int) or decimals < 0:
            raise ConfigError(f"output.decimals must be a non-negative integer, got {decimals!r}")


def load_config(filepath=None):
    """Read the YAML file named by ``filepath`` or JUMPGAMES_CONFIG; defaults fill the gaps.

    JUMPGAMES_LOG_LEVEL overrides logging.level.
    """
    load_dotenv()
    filepath = filepath or os.environ.get("JUMPGAMES_CONFIG")
    data = {}
    if filepath:
        try:
            with open(filepath, "r") as f:
                data = yaml.safe_load(f) or {}
        except (OSError, yaml.YAMLError) as e:
            raise ConfigError(f"cannot read config {filepath}: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"config {filepath} is not a mapping")
    level = os.environ.get("JUMPGAMES_LOG_LEVEL")
    if level:
        data.setdefault("logging", {})
        data["logging"] = dict(data["logging"] or {}, level=level)
    return Config(data)
