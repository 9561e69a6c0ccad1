"""Circle packing fractals, their canonical energy forms and spectra."""

from . import carpet, errors, forms, gasket, geom, spectra, svg

__all__ = ["carpet", "errors", "forms", "gasket", "geom", "spectra", "svg"]
__version__ = "0.1.0"
