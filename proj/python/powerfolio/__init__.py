"""Optimal portfolios under power utility of absolute and benchmark-relative wealth."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
