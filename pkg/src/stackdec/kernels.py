"""Backend selection for the hot kernels.

The compiled ``_ckernels`` extension is used when importable; otherwise, or
when ``STACKDEC_PURE_PYTHON`` is set to a non-empty value other than ``0``,
the numpy fallback in ``_pykernels`` is used.  Both expose ``run_simplex``,
``pivot`` and ``grid_search`` with identical semantics.
"""
from __future__ import annotations

import os
from types import ModuleType

from . import _pykernels

STATUS_OPTIMAL = _pykernels.STATUS_OPTIMAL
STATUS_UNBOUNDED = _pykernels.STATUS_UNBOUNDED
STATUS_ITERATION_LIMIT = _pykernels.STATUS_ITERATION_LIMIT
RULE_BLAND = _pykernels.RULE_BLAND
RULE_DANTZIG = _pykernels.RULE_DANTZIG


def _load_compiled() -> ModuleType | None:
    try:
        from . import _ckernels
    except ImportError:
        return None
    return _ckernels


def _force_pure() -> bool:
    return os.environ.get("STACKDEC_PURE_PYTHON", "") not in ("", "0")


compiled = None if _force_pure() else _load_compiled()
python = _pykernels

_active: ModuleType = compiled if compiled is not None else python
BACKEND = "cython" if _active is compiled else "python"


def available_backends() -> dict[str, ModuleType]:
    backends = {"python": python}
    ext = _load_compiled()
    if ext is not None:
        backends["cython"] = ext
    return backends


def get_backend(name: str | None = None) -> ModuleType:
    if name is None:
        return _active
    try:
        return available_backends()[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} is not available") from None


def run_simplex(T, basis, n_eligible, max_iter, tol, rule=RULE_BLAND):
    return _active.run_simplex(T, basis, n_eligible, max_iter, tol, rule)


def grid_search(r_d, r_a, defender_idx, attacker_idx, steps, tie_tol):
    return _active.grid_search(r_d, r_a, defender_idx, attacker_idx, steps, tie_tol)
