"""Discrete Bayesian-network fusion of road-condition and friction sensors."""

import logging

from .errors import FrictionNetError
from .inference import Distribution, posterior_enumeration, posterior_ve, prune_barren
from .network import Cpt, Network, Variable, build_network, joint_probability

__all__ = [
    "Cpt",
    "Distribution",
    "FrictionNetError",
    "Network",
    "Variable",
    "build_network",
    "joint_probability",
    "posterior_enumeration",
    "posterior_ve",
    "prune_barren",
]

__version__ = "0.1.0"

logging.getLogger(__name__).addHandler(logging.NullHandler())
