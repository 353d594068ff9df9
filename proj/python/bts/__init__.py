"""Batched Thompson sampling simulator for headline testing."""

try:
    from ._bts import *  # noqa: F401,F403
    from ._bts import __version__  # noqa: F401
except ImportError:  # in-tree build: the extension sits next to the build outputs
    from _bts import *  # noqa: F401,F403
    from _bts import __version__  # noqa: F401
