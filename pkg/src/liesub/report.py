from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np


@dataclass
class CheckReport:
    """Outcome of one numerical check.

    ``measured`` and ``tolerances`` hold plain floats/ints/strings so the
    record serializes to JSON as is; bulky arrays go in ``series``.
    """

    check: str
    passed: bool
    measured: dict[str, Any] = field(default_factory=dict)
    tolerances: dict[str, float] = field(default_factory=dict)
    status: str = ""
    series: dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.status:
            self.status = "pass" if self.passed else "fail"
