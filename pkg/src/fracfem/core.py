"""Assembly-backend selection.

The element-pair loop is the hot spot, so it exists twice: a compiled
extension (fracfem._speedups) and a pure-NumPy fallback (fracfem._corepy)
with identical semantics.  The compiled one is preferred when importable;
set FRACFEM_FORCE_FALLBACK=1 to insist on the fallback.
"""
from __future__ import annotations

import os

from . import _corepy

if os.environ.get("FRACFEM_FORCE_FALLBACK", "") == "1":
    _impl = _corepy
    BACKEND = "fallback"
else:
    try:
        from . import _speedups as _impl  # type: ignore[attr-defined]
        BACKEND = "compiled"
    except ImportError:
        _impl = _corepy
        BACKEND = "fallback"

make_quad_params = _corepy.make_quad_params


def assemble_pair_blocks(verts, simplices, dof_of_node, inside, n_core, n_dof,
                         dim, s, cns, level=1):
    """Element-pair stiffness contributions via the selected backend."""
    return _impl.assemble_pair_blocks(verts, simplices, dof_of_node, inside,
                                      n_core, n_dof, dim, s, cns, level)
