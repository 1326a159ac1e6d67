"""Harmonic maps between conformal metrics: solver and identity checks."""

from ._hmlab import *  # noqa: F401,F403
from ._hmlab import __doc__ as _core_doc

__doc__ = _core_doc
