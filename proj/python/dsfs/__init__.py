"""Domain-specific face synthesis for still-to-video face recognition."""

from ._dsfs import (  # noqa: F401
    ConfigError,
    DataError,
    ap_cluster,
    decompose,
    delaunay,
    dsq,
    gcq,
    glq,
    net_similarity,
    roc_metrics,
    rotation_matrix,
    run_benchmark,
    sci_from_masses,
    solve,
    two_step_select,
)

__version__ = "0.1.0"
