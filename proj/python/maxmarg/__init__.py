"""Exact and bounded decoding of the maximal marginal path in pairwise Markov chains."""

from ._maxmarg import *  # noqa: F401,F403
from ._maxmarg import __version__  # noqa: F401
