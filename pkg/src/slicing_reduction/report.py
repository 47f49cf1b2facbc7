from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


@dataclass
class VerificationReport:
    """Outcome of one numerically checked identity or inequality.

    ``values`` holds the computed quantities (left/right sides, margins, ...),
    ``error`` the combined error estimate the comparison was made against.
    """

    name: str
    passed: bool
    values: dict[str, Any] = field(default_factory=dict)
    tolerance: float = 0.0
    error: float = 0.0
    details: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return _plain(asdict(self))
