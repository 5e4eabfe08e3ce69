"""Python interface to the mosaic C++ core."""
from ._mosaic import *  # noqa: F401,F403
from ._mosaic import __version__  # noqa: F401
