"""Python bindings for the metasurface antenna testbed twin."""

from ._dmatwin import *  # noqa: F401,F403

__version__ = "0.1.0"
