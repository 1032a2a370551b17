"""Hot-kernel backend selection.

The compiled Cython extension is used when it was built; otherwise the
pure-Python twin takes over. ``POLYMAX_PURE_PYTHON=1`` forces the
fallback (used by the parity tests and the benchmark).
"""

import os

if os.environ.get("POLYMAX_PURE_PYTHON", "0") == "1":
    from ._pykernels import cusum_trace, lag_design_matrix

    BACKEND = "python"
else:
    try:
        from ._ckernels import cusum_trace, lag_design_matrix

        BACKEND = "compiled"
    except ImportError:
        from ._pykernels import cusum_trace, lag_design_matrix

        BACKEND = "python"

__all__ = ["lag_design_matrix", "cusum_trace", "BACKEND"]
