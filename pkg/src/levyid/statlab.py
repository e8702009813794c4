"""Weighted empirical Laplace functionals, bootstrap errors, z comparisons."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .core import LevyFunctionalPanel, PanelEntry, WeightedEnsemble
from .randkit import RngStream

# fixed fallback so bootstrap errors are reproducible when no stream is given
_DEFAULT_BOOT_SEED = 48813007

# half-width of the central 68.27% of the bootstrap distribution
_PCT_LO = 100.0 * norm.cdf(-1.0)
_PCT_HI = 100.0 * norm.cdf(1.0)

_BOOT_CELL_BUDGET = 5_000_000


def laplace_values(ensemble: WeightedEnsemble, entry: PanelEntry) -> np.ndarray:
    """Per-path values of exp(-sum_i alphas[i] * path(times[i]))."""
    idx = ensemble.grid.index_of(entry.times)
    expo = ensemble.values[:, idx] @ np.asarray(entry.alphas)
    return np.exp(-expo)


def _bootstrap_ratio_se(nums, den, b, gen) -> np.ndarray:
    """Percentile SE of ratios sum(num[idx]) / sum(den[idx]) over resamples."""
    n = den.size
    if n < 2 or b < 2:
        return np.zeros(len(nums))
    ests = np.empty((len(nums), b))
    chunk = max(1, _BOOT_CELL_BUDGET // n)
    done = 0
    while done < b:
        k = min(chunk, b - done)
        idx = gen.integers(0, n, size=(k, n))
        dsum = den[idx].sum(axis=1)
        for j, x in enumerate(nums):
            ests[j, done : done + k] = x[idx].sum(axis=1) / dsum
        done += k
    hi = np.percentile(ests, _PCT_HI, axis=1)
    lo = np.percentile(ests, _PCT_LO, axis=1)
    return 0.5 * (hi - lo)


def weighted_laplace_panel(
    ensemble: WeightedEnsemble,
    panel: LevyFunctionalPanel,
    b: int = 500,
    rng: RngStream | None = None,
):
    """Self-normalized estimates and bootstrap SEs for every panel entry.

    One set of bootstrap resamples is shared across entries, preserving
    their cross-correlation.
    """
    w = ensemble.weights
    sw = w.sum()
    if sw <= 0:
        raise ValueError("all ensemble weights are zero")
    vals = [laplace_values(ensemble, e) for e in panel]
    est = np.array([(w @ v) / sw for v in vals])
    if rng is None:
        rng = RngStream(_DEFAULT_BOOT_SEED)
    se = _bootstrap_ratio_se([w * v for v in vals], w, b, rng.generator)
    return est, se


def weighted_laplace(
    ensemble: WeightedEnsemble,
    entry: PanelEntry,
    b: int = 500,
    rng: RngStream | None = None,
) -> tuple[float, float]:
    """Self-normalized weighted Laplace estimate with bootstrap SE.

    Invariant under rescaling all weights by a positive constant.
    """
    est, se = weighted_laplace_panel(ensemble, LevyFunctionalPanel((entry,)), b, rng)
    return float(est[0]), float(se[0])


def bootstrap_mean_se(x: np.ndarray, b: int = 500, rng: RngStream | None = None) -> float:
    """Bootstrap SE of a plain mean."""
    if rng is None:
        rng = RngStream(_DEFAULT_BOOT_SEED)
    den = np.ones_like(x)
    return float(_bootstrap_ratio_se([np.asarray(x, float)], den, b, rng.generator)[0])


def compare(lhs: tuple[float, float], rhs: tuple[float, float], z_crit: float = 3.0):
    """z-score of lhs - rhs given (estimate, se) pairs, plus a pass verdict.

    Two exact values (se 0 on both sides) pass only when equal; an unequal
    exact pair is a deterministic mismatch and fails with z = inf.
    """
    le, ls = lhs
    re, rs = rhs
    denom = math.hypot(ls, rs)
    # differences at float-rounding scale carry no statistical information,
    # even when a degenerate bootstrap SE is equally tiny
    if abs(le - re) <= 1e-12 * max(1.0, abs(le), abs(re)):
        return 0.0, True
    if denom == 0:
        return math.inf, False
    z = (le - re) / denom
    return z, abs(z) <= z_crit


def bonferroni_crit(z_crit: float, k: int) -> float:
    """Critical value so that k simultaneous two-sided tests keep the
    family-wise level of a single test at z_crit."""
    if k < 1:
        raise ValueError("k must be at least 1")
    alpha = 2.0 * norm.sf(z_crit)
    return float(norm.isf(alpha / (2.0 * k)))


def effective_sample_size(weights: np.ndarray) -> float:
    w = np.abs(np.asarray(weights, float))
    s2 = (w**2).sum()
    if s2 == 0:
        return 0.0
    return float(w.sum() ** 2 / s2)


@dataclass
class IdentityReport:
    """Panel-wise two-sided comparison with per-entry and family-wise verdicts."""

    label: str
    panel: LevyFunctionalPanel
    lhs: np.ndarray
    rhs: np.ndarray
    lhs_se: np.ndarray
    rhs_se: np.ndarray
    z: np.ndarray
    entry_pass: list[bool]
    overall_pass: bool
    z_crit: float
    bonferroni_z: float
    n: int
    notes: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        entries = []
        for k, e in enumerate(self.panel):
            entries.append(
                {
                    "alphas": list(e.alphas),
                    "times": list(e.times),
                    "lhs": float(self.lhs[k]),
                    "lhs_se": float(self.lhs_se[k]),
                    "rhs": float(self.rhs[k]),
                    "rhs_se": float(self.rhs_se[k]),
                    "z": float(self.z[k]),
                    "pass": bool(self.entry_pass[k]),
                }
            )
        return {
            "label": self.label,
            "entries": entries,
            "z_crit": self.z_crit,
            "bonferroni_z": self.bonferroni_z,
            "n": self.n,
            "pass": bool(self.overall_pass),
            **({"notes": self.notes} if self.notes else {}),
        }


def build_identity_report(
    label: str,
    panel: LevyFunctionalPanel,
    lhs,
    rhs,
    lhs_se,
    rhs_se,
    z_crit: float,
    n: int,
    notes: dict | None = None,
) -> IdentityReport:
    """Assemble per-entry z-scores and the Bonferroni family-wise verdict."""
    lhs, rhs = np.asarray(lhs, float), np.asarray(rhs, float)
    lhs_se, rhs_se = np.asarray(lhs_se, float), np.asarray(rhs_se, float)
    z = np.empty(len(panel))
    entry_pass = []
    for k in range(len(panel)):
        zk, ok = compare((lhs[k], lhs_se[k]), (rhs[k], rhs_se[k]), z_crit)
        z[k] = zk
        entry_pass.append(ok)
    bz = bonferroni_crit(z_crit, len(panel))
    overall = bool(np.all(np.abs(z) <= bz))
    return IdentityReport(
        label, panel, lhs, rhs, lhs_se, rhs_se, z, entry_pass, overall,
        z_crit, bz, n, notes or {},
    )
