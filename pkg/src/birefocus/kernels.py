"""Backend selection for the focal-field accumulation kernels.

The compiled extension (built from _kernels.pyx) is used when it imported
cleanly; otherwise the numpy fallback takes over with the same contract.
Set BIREFOCUS_PURE=1 to force the fallback, e.g. for the benchmark or to
rule the extension out when debugging.
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("BIREFOCUS_PURE") == "1":
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _kernels_py

BACKEND = "python" if _impl is _kernels_py else "compiled"

radial_sums = _impl.radial_sums
axial_sums = _impl.axial_sums
