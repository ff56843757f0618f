"""Analytic check of the standard-approximation conditions (i)-(iii)."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from imchaos.errors import ConfigError, NotComparable
from imchaos.field.models import Domain, LogCorrelatedModel, as_points, distance
from imchaos.field.schemes import ApproxScheme, scheme_cross_covariance


@dataclass
class StandardApproxReport:
    cross_ok: bool
    cutoff_ok: bool
    upper_ok: bool
    cross_l1: list[float]
    cutoff_sup: list[float]
    upper_sup: list[float]
    cutoffs: list[float]
    bound: float
    drift_tol: float
    meta: dict = field(default_factory=dict)

    @property
    def all_ok(self) -> bool:
        return self.cross_ok and self.cutoff_ok and self.upper_ok

    def to_dict(self) -> dict:
        return {
            "i_cross_covariance": self.cross_ok,
            "ii_cutoff_comparison": self.cutoff_ok,
            "iii_upper_bound": self.upper_ok,
            "cross_l1": self.cross_l1,
            "cutoff_sup": self.cutoff_sup,
            "upper_sup": self.upper_sup,
            "cutoffs": self.cutoffs,
            "bound": self.bound,
            "drift_tol": self.drift_tol,
            **self.meta,
        }


def _pairs(model: LogCorrelatedModel, K) -> tuple[np.ndarray, np.ndarray]:
    pts = as_points(K, model.domain)
    if model.domain is Domain.CIRCLE:
        # translation invariant: one base point against all angular offsets suffices
        return np.zeros_like(pts), pts - pts[0]
    i, j = np.triu_indices(len(pts))
    return pts[i], pts[j]


def check_standard_approximation(
    model: LogCorrelatedModel,
    schemes: Sequence[ApproxScheme],
    K,
    bound: float = 3.0,
    drift_tol: float = 0.3,
) -> StandardApproxReport:
    """Evaluate conditions (i)-(iii) on the compact set K (no sampling).

    (i)   mean |E X_m X_n - C| over off-diagonal pairs of K, for consecutive (m, n),
          must decrease and halve over the sequence;
    (ii)  sup |Cov_n - log 1/max(c_n, |x - y|)| must stay below ``bound`` and drift
          by at most ``drift_tol`` along the sequence;
    (iii) sup over off-diagonal pairs of Cov_n - log 1/|x - y| likewise.
    """
    if len(schemes) < 3:
        raise ConfigError("need at least three schemes")
    cut = [s.cutoff for s in schemes]
    if any(b >= a for a, b in zip(cut, cut[1:])):
        raise ConfigError("cutoffs must strictly decrease")
    if len({type(s.kind) for s in schemes}) != 1 or len({s.kind for s in schemes}) != 1:
        raise NotComparable("schemes of different kinds")
    x, y = _pairs(model, K)
    r = distance(x, y, model.domain)
    off = r > 1e-14
    target = np.full(r.shape, np.nan)
    target[off] = model.kernel(x[off], y[off])
    l1 = []
    for a, b in zip(schemes, schemes[1:]):
        c = scheme_cross_covariance(model, a, b, x[off], y[off])
        l1.append(float(np.mean(np.abs(c - target[off]))))
    sup2, sup3 = [], []
    for s in schemes:
        c = scheme_cross_covariance(model, s, s, x, y)
        ref = -np.log(np.maximum(s.cutoff, r)) + model.g(x, y)
        sup2.append(float(np.max(np.abs(c - ref))))
        sup3.append(float(np.max(c[off] - target[off])))
    cross_ok = all(b < a for a, b in zip(l1, l1[1:])) and l1[-1] <= 0.5 * l1[0]
    cutoff_ok = max(sup2) <= bound and sup2[-1] - sup2[0] <= drift_tol
    upper_ok = max(sup3) <= bound and sup3[-1] - sup3[0] <= drift_tol
    return StandardApproxReport(cross_ok, cutoff_ok, upper_ok, l1, sup2, sup3, cut, bound, drift_tol)
