"""Select the compiled kernels when available, else the numpy mirror.

Set ``BERGMAN_LAB_PURE_PYTHON=1`` to force the fallback.
"""
import os

BACKEND = "python"

if os.environ.get("BERGMAN_LAB_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from ._ckernels import horner_scaled, log_moments_expdisk  # noqa: F401
        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on build
        pass

if BACKEND == "python":
    from ._pykernels import horner_scaled, log_moments_expdisk  # noqa: F401

__all__ = ["BACKEND", "horner_scaled", "log_moments_expdisk"]
