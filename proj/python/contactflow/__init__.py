"""Contact Hamiltonian lifts of dynamics on dually flat spaces."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
