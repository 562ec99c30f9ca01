"""Backend dispatch for the pairwise-distance kernel.

Prefers the compiled Cython extension and falls back to the vectorized
NumPy implementation when the extension is unavailable.  The environment
variable POISSONFLATS_PAIRCORE ("compiled" or "python") forces a backend,
which the benchmark and the backend-equivalence tests rely on.
"""

import os

_forced = os.environ.get("POISSONFLATS_PAIRCORE", "").strip().lower()
if _forced not in ("", "compiled", "python"):
    raise RuntimeError(
        f"POISSONFLATS_PAIRCORE must be 'compiled' or 'python', got {_forced!r}")

if _forced == "python":
    from . import _paircore_py as _impl
else:
    try:
        from . import _paircore_cy as _impl  # type: ignore[attr-defined]
    except ImportError:
        if _forced == "compiled":
            raise
        from . import _paircore_py as _impl

pair_records = _impl.pair_records
BACKEND = _impl.BACKEND


def backend_name() -> str:
    """Active kernel backend: "compiled" or "python"."""
    return BACKEND
