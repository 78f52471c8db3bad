"""Select the compiled hot-kernel core at import, with a pure-numpy fallback.

Set KFPROP_FORCE_PYTHON=1 to skip the compiled extension (used by the
benchmark and by tests that exercise the fallback path).
"""

import os

if os.environ.get("KFPROP_FORCE_PYTHON"):
    from . import _core_py as core

    COMPILED = False
else:
    try:
        from . import _core as core  # type: ignore[attr-defined]

        COMPILED = True
    except ImportError:
        from . import _core_py as core

        COMPILED = False


def backend_name() -> str:
    return "compiled" if COMPILED else "python"
