"""Event-based ball tracking testbed.

Synthetic event-camera scenes, the LDSI noise/data-reduction filter, a
vicinity-vote tracker, a frame-based comparison chain, five-bar robot
kinematics and a cyclic master/slave bus simulation, composed into a
closed tracking loop.
"""

from ldsitrack.events import Event, EventStream, SensorGeometry

__all__ = ["Event", "EventStream", "SensorGeometry"]
__version__ = "0.1.0"
