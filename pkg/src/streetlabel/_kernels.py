"""Kernel backend selection.

The compiled extension is used when it was built; otherwise the pure-Python
module is loaded. Set ``STREETLABEL_PURE_PYTHON=1`` to force the fallback.
"""

import os

if os.environ.get("STREETLABEL_PURE_PYTHON", "") not in ("", "0"):
    from ._pykernels import *  # noqa: F401,F403
    from ._pykernels import BACKEND
else:
    try:
        from ._ckernels import *  # noqa: F401,F403
        from ._ckernels import BACKEND
    except ImportError:
        from ._pykernels import *  # noqa: F401,F403
        from ._pykernels import BACKEND

__all__ = ["BACKEND", "angle_diff", "project", "match_score", "best_segment", "within_radius", "bilinear_sample"]
