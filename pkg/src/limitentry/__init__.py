"""Price competition with mandatory purchase: Free Market versus Limited Entry."""

from .config import NumericConfig
from .distributions import classify, epsk, make_distribution

__all__ = ["NumericConfig", "classify", "epsk", "make_distribution"]
__version__ = "0.1.0"
