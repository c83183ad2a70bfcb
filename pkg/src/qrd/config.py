"""Numerical tolerances shared across the package.

Defaults can be overridden per thread/task with :func:`tolerances`, which
installs a modified copy in a context variable; nothing here is mutated in
place.
"""

from __future__ import annotations

import contextlib
import contextvars
from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    hermitian: float = 1e-10
    trace: float = 1e-10
    psd: float = 1e-9
    norm: float = 1e-10
    completeness: float = 1e-9
    isometry: float = 1e-10
    entropy_clamp: float = 1e-12
    max_dim: int = 256


_current: contextvars.ContextVar[Tolerances] = contextvars.ContextVar(
    "qrd_tolerances", default=Tolerances()
)


def get_tolerances() -> Tolerances:
    return _current.get()


@contextlib.contextmanager
def tolerances(**overrides):
    """Temporarily override tolerance fields, e.g. ``with tolerances(psd=1e-7):``."""
    token = _current.set(replace(_current.get(), **overrides))
    try:
        yield _current.get()
    finally:
        _current.reset(token)
