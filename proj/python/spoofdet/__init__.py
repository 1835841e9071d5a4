"""Spoofing detection from pairs of RSS vectors.

The heavy lifting happens in the compiled ``_spoofdet`` extension; this
package re-exports it. Settings dictionaries use the same keys as the
command-line ``--set KEY=VALUE`` option, e.g. ``{"iterations": 2}``.
"""

from ._spoofdet import *  # noqa: F401,F403
from ._spoofdet import (  # noqa: F401
    ConfigError,
    DataError,
    DegeneratePowerError,
    DimensionError,
    IoError,
    SpoofdetError,
    TrainingError,
)

__version__ = "0.1.0"
