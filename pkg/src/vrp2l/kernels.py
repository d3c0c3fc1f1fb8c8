"""Backend selection for the hot kernels.

The compiled extension is used when it was built; otherwise (or when the
environment variable ``VRP2L_PURE`` is set to a non-empty value other than
``0``) the pure-Python implementation is used. Both give identical results.
"""
import os

_force_pure = os.environ.get("VRP2L_PURE", "") not in ("", "0")

if _force_pure:
    from ._kernels_py import blocks, expand, fits, held_karp, score_of, skyline_add
    BACKEND = "python"
else:
    try:
        from ._ckernels import blocks, expand, fits, held_karp, score_of, skyline_add
        BACKEND = "cython"
    except ImportError:  # extension not built
        from ._kernels_py import blocks, expand, fits, held_karp, score_of, skyline_add
        BACKEND = "python"

__all__ = ["BACKEND", "blocks", "expand", "fits", "held_karp", "score_of", "skyline_add"]
