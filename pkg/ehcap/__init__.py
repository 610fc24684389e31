# This file indicates that the 'ehcap' directory is a Python package
from .constants import APP_VERSION as __version__  # noqa: F401
