"""Python bindings for the LSALSA sparse coding toolkit."""

from ._lsalsa import *  # noqa: F401,F403
from ._lsalsa import __version__, LsalsaError  # noqa: F401
