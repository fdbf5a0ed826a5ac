"""SAC-aware cross-validation toolkit for presence/absence geodata."""

try:
    from ._core import *  # noqa: F401,F403
    from ._core import __version__  # noqa: F401
except ImportError:  # running against a build tree without an installed wheel
    from _core import *  # noqa: F401,F403
    from _core import __version__  # noqa: F401
