"""Figure rendering for the DS I solver's output files (snapshots, norm
series, fit reports); consumes the documented formats only."""

__version__ = "0.1.0"

from .formats import FormatError, NormSeries, Snapshot, read_fits, read_norms, read_snapshot  # noqa: F401
from .render import (  # noqa: F401
    render_contour,
    render_loglog_fit,
    render_norms,
    render_residual,
    render_spectrum,
    render_surface,
)
