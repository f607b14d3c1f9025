"""Complex named-entity recognition toolkit."""

from ._nerkit import *  # noqa: F401,F403
from ._nerkit import __doc__  # noqa: F401

__version__ = "0.1.0"
