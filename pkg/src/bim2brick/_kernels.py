"""Kernel dispatch: compiled extension when available, pure Python otherwise.

Set ``BIM2BRICK_PURE_PYTHON=1`` to force the fallback.
"""
import os

if os.environ.get("BIM2BRICK_PURE_PYTHON"):
    from ._pykernels import point_in_polygon, points_in_polygon, tokenize

    BACKEND = "python"
else:
    try:
        from ._ckernels import point_in_polygon, points_in_polygon, tokenize

        BACKEND = "cython"
    except ImportError:
        from ._pykernels import point_in_polygon, points_in_polygon, tokenize

        BACKEND = "python"

__all__ = ["BACKEND", "point_in_polygon", "points_in_polygon", "tokenize"]
