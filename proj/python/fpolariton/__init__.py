"""Phase-modulated cavity-BEC linear-response toolkit."""

from fpolariton._fpolariton import *  # noqa: F401,F403
from fpolariton._fpolariton import __version__  # noqa: F401
