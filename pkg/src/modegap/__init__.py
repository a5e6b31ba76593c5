"""Mode-gap PhCWG cavity workbench: geometry, 2D FDTD, modal analysis,
cavity QED and photoluminescence spectral fitting."""

__version__ = "0.1.0"

from . import cqed, fdtd, fileio, geometry, lm, modal, spectra  # noqa: F401
