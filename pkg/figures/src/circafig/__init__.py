"""circafig: offline figure rendering for circaforage CSV bundles.

The renderer consumes the documented CSV schemas (histograms, mean
activation overlays, spectrograms, PRC curves, training curves, delay
pairs) and plots their contents verbatim; it never recomputes analysis
values.  Day/night shading and cycle structure come from the bundle's
manifest and CSV columns."""

__version__ = "0.1.0"
