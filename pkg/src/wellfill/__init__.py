"""Well-log gap analysis, artificial gap injection and gap completion."""

__version__ = "0.1.0"

from .wells import PROPERTIES, CoordSystem, Gap, PropertyKind, WellHeader, WellLog  # noqa: E402

__all__ = ["PROPERTIES", "CoordSystem", "Gap", "PropertyKind", "WellHeader", "WellLog", "__version__"]
