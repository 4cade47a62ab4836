"""Photon-blockade simulation: master equation, correlations, Mollow spectra,
quantum trajectories and the linear-detection estimator chain.

Frequencies and rates are angular (rad/s); times are in seconds.
"""

from ._core import *  # noqa: F401,F403
from ._core import __doc__  # noqa: F401
