"""MomentReport: the shared result record of every check."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

PASS = "PASS"
FAIL = "FAIL"
INFO = "INFO"


def _clean(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": _clean(obj.real), "im": _clean(obj.imag)}
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


@dataclass
class MomentReport:
    """Estimate with standard error, oracle and verdict.

    ``runtime`` is kept out of the JSON payload so reruns are byte-identical.
    """

    name: str
    value: complex
    stderr: float
    replicas: int
    oracle: float | complex | None = None
    verdict: str = INFO
    tolerance: str = ""
    meta: dict = field(default_factory=dict)
    runtime: float = 0.0

    @property
    def ratio(self) -> float | None:
        if self.oracle is None or self.oracle == 0:
            return None
        return abs(self.value) / abs(self.oracle) if isinstance(self.oracle, complex) else float(np.real(self.value) / self.oracle)

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def to_dict(self) -> dict:
        v = complex(self.value)
        return _clean(
            {
                "name": self.name,
                "estimate": {"re": v.real, "im": v.imag},
                "stderr": self.stderr,
                "replicas": self.replicas,
                "oracle": self.oracle,
                "ratio": self.ratio,
                "verdict": self.verdict,
                "tolerance": self.tolerance,
                "meta": self.meta,
            }
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def verdict(ok: bool) -> str:
    return PASS if ok else FAIL


def mean_stderr(samples: np.ndarray, batches: int = 0) -> tuple[complex | float, float]:
    """Mean and standard error; with ``batches`` > 0 use batch means (for correlated chains)."""
    x = np.asarray(samples)
    n = x.shape[0]
    if n < 2:
        return (x.mean() if n else np.nan), np.inf
    if batches and n >= 2 * batches:
        usable = (n // batches) * batches
        bm = x[:usable].reshape(batches, -1).mean(axis=1)
        return x.mean(), float(np.sqrt(np.sum(np.abs(bm - bm.mean()) ** 2) / (batches - 1) / batches))
    return x.mean(), float(np.sqrt(np.sum(np.abs(x - x.mean()) ** 2) / (n - 1) / n))
