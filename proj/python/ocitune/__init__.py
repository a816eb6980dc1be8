"""Closed-loop data-driven tuning of fixed-structure MIMO controllers."""

import json

from . import _core
from ._core import Error, __version__, prbs, snr_db

__all__ = [
    "Error",
    "__version__",
    "collect",
    "identify",
    "monte_carlo",
    "prbs",
    "snr_db",
    "study_config",
    "transmission_zeros",
    "validate_config",
]


def _text(config):
    return config if isinstance(config, str) else json.dumps(config)


def study_config(name):
    """Config dict of a built-in study: 'diagonal', 'block_triangular' or 'mismatched'."""
    return json.loads(_core.study_config(name))


def validate_config(config):
    """Canonical form of a config dict; raises ocitune.Error when invalid."""
    return json.loads(_core.validate_config(_text(config)))


def collect(config, seed=1):
    """Closed-loop batch as a dict of (channels x samples) arrays."""
    return _core.collect(_text(config), seed)


def identify(config, u, y):
    """Identification report dict for one batch."""
    return json.loads(_core.identify(_text(config), u, y))


def monte_carlo(config, runs, threads=None):
    """Summary dict of a Monte Carlo campaign."""
    return json.loads(_core.monte_carlo(_text(config), runs, threads))


def transmission_zeros(matrix):
    """[(zero, output direction)] of a transfer matrix in config grid form."""
    return _core.transmission_zeros(_text(matrix))
