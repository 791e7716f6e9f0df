from .render import (
    EmptySeriesError,
    PlotKind,
    PlotSpec,
    SchemaError,
    cwnd_trace_points,
    ipg_cdf_points,
    render,
    train_cdf_points,
)

__version__ = "0.1.0"
