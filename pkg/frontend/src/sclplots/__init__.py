"""Rendering frontend for sclhom run manifests; presentation only."""

from .jobs import HashMismatch, Manifest, MissingColumns, PlotJob, load_manifest
from .render import (RENDERERS, render_convergence, render_fields,
                     render_histogram, render_moments)

__version__ = "0.1.0"
