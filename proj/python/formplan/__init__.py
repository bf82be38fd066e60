"""Formation planning with Fast Marching Square.

Grids cross the boundary as 2-D numpy arrays indexed ``[j, i]``; row 0 is
the bottom row of the map (lowest world y).
"""

from ._formplan import *  # noqa: F401,F403
from ._formplan import (
    FormplanError,
    MapError,
    PlanningError,
    ScenarioError,
    WIRE_VERSION,
)

__all__ = [name for name in dir() if not name.startswith("_")]
