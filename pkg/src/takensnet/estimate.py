"""
Reading embedding parameters off the input-weight relevance profile.

Dimension indices in the public results are 1-based, matching the bar-chart
labelling where dimension ``N`` is the observation right before the target.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import NoSignalError, ValidationError
from .net import Network

DEFAULT_EPS_MAX = 0.80
DEFAULT_EPS_MIN = 0.10
STOCHASTIC_THRESHOLD = 0.5
_FUZZ = 4 * np.finfo(float).eps


def quantile(values, p: float) -> float:
    """Linear-interpolation quantile between order statistics, ``h = (n-1) p``.

    Positions within a few ulps of an integer snap to it, so that e.g. the
    0.8 quantile of 16 values is exactly the 13th order statistic.
    """
    s = np.sort(np.asarray(values, dtype=float))
    if s.size == 0:
        raise ValidationError("quantile of an empty sample")
    if not 0.0 <= p <= 1.0:
        raise ValidationError("quantile level must lie in [0, 1]")
    h = (s.size - 1) * p
    lo = int(math.floor(h + _FUZZ * max(h, 1.0)))
    lo = min(lo, s.size - 1)
    frac = h - lo
    if frac <= _FUZZ * max(h, 1.0) or lo == s.size - 1:
        return float(s[lo])
    return float(s[lo] + frac * (s[lo + 1] - s[lo]))


def five_number(values) -> Tuple[float, float, float, float, float]:
    v = np.asarray(values, dtype=float)
    return (float(v.min()), quantile(v, 0.25), quantile(v, 0.5), quantile(v, 0.75), float(v.max()))


def relevance(net: Network) -> np.ndarray:
    """Per-input relevance: summed magnitude of each input's hidden connections."""
    return np.abs(net.w_in).sum(axis=1)


@dataclass(frozen=True)
class RelevanceProfile:
    per_fold: np.ndarray  # (folds, N)
    mean: np.ndarray  # (N,)
    quartiles: np.ndarray  # (N, 5): min, Q1, median, Q3, max

    @property
    def n_dims(self) -> int:
        return self.per_fold.shape[1]

    def write_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["dimension", "mean", "min", "q1", "median", "q3", "max"])
            for i, (mu, q) in enumerate(zip(self.mean, self.quartiles), start=1):
                w.writerow([i] + [f"{v:.17g}" for v in (mu, *q)])
        return path


def aggregate(profiles: Sequence[Sequence[float]]) -> RelevanceProfile:
    """Stack fold profiles; column means and five-number summaries."""
    if len(profiles) == 0:
        raise ValidationError("need at least one relevance profile")
    lengths = {len(p) for p in profiles}
    if len(lengths) != 1:
        raise ValidationError(f"relevance profiles differ in length: {sorted(lengths)}")
    per_fold = np.array(profiles, dtype=float)
    quart = np.array([five_number(col) for col in per_fold.T])
    return RelevanceProfile(per_fold, per_fold.mean(axis=0), quart)


@dataclass(frozen=True)
class EmbeddingEstimate:
    m: int
    tau: int
    j: int  # most relevant dimension (1-based)
    k: Optional[int]  # selected local minimum (1-based) or None
    threshold: float  # relevance quantile at eps_max
    floor: float  # eps_min * I_j
    eps_max: float = DEFAULT_EPS_MAX
    eps_min: float = DEFAULT_EPS_MIN
    stochastic_score: Optional[float] = None
    stochastic_flag: bool = False

    def to_dict(self) -> dict:
        return {
            "m": self.m, "tau": self.tau, "j": self.j, "k": self.k,
            "threshold": self.threshold, "floor": self.floor,
            "eps_max": self.eps_max, "eps_min": self.eps_min,
            "stochastic_score": self.stochastic_score,
            "stochastic_flag": self.stochastic_flag,
        }


def _is_local_min(I, i) -> bool:
    # <= every neighbour and strictly below at least one; flat runs with no
    # descent on either side are not minima
    nbrs = [I[n] for n in (i - 1, i + 1) if 0 <= n < len(I)]
    return all(I[i] <= v for v in nbrs) and any(I[i] < v for v in nbrs)


def select_embedding(profile, eps_max: float = DEFAULT_EPS_MAX,
                     eps_min: float = DEFAULT_EPS_MIN) -> EmbeddingEstimate:
    """Choose ``(m, tau)`` from a mean relevance vector.

    Dimensions below ``eps_min`` times the top relevance count as forgotten.
    ``m`` is the number of remaining dimensions whose relevance exceeds the
    ``eps_max`` quantile of all relevances, never less than two. ``tau`` is
    one more than the distance from the most relevant dimension to the
    rightmost local minimum that is not forgotten; 1 if there is none.

    ``profile`` may be a :class:`RelevanceProfile` or a plain vector.
    """
    stoch = None
    if isinstance(profile, RelevanceProfile):
        I = profile.mean
        if profile.per_fold.shape[0] >= 2:
            stoch = stochasticity_diagnostic(profile, eps_min=eps_min)
    else:
        I = np.asarray(profile, dtype=float)
    N = I.size
    if N < 2:
        raise ValidationError("need at least two dimensions")
    if not 0.0 < eps_min < eps_max <= 1.0:
        raise ValidationError("thresholds must satisfy 0 < eps_min < eps_max <= 1")
    if np.any(I < 0) or not np.all(np.isfinite(I)):
        raise ValidationError("relevances must be finite and non-negative")
    if not np.any(I > 0):
        raise NoSignalError("all relevances are zero; the network kept no input")

    j = int(np.argmax(I))  # first maximal index
    floor = eps_min * I[j]
    q = quantile(I, eps_max)
    m = max(int(np.count_nonzero((I > q) & (I >= floor))), 2)

    k = None
    for i in range(N - 1, -1, -1):
        if i != j and _is_local_min(I, i) and I[i] >= floor:
            k = i
            break
    tau = abs(j - k) + 1 if k is not None else 1

    score, flag = stoch if stoch is not None else (None, False)
    return EmbeddingEstimate(
        m=m, tau=tau, j=j + 1, k=None if k is None else k + 1,
        threshold=q, floor=float(floor), eps_max=eps_max, eps_min=eps_min,
        stochastic_score=score, stochastic_flag=flag,
    )


def stochasticity_diagnostic(profile: RelevanceProfile,
                             threshold: float = STOCHASTIC_THRESHOLD,
                             eps_min: float = DEFAULT_EPS_MIN) -> Tuple[float, bool]:
    """Fold-to-fold spread of the relevance profile.

    The score is the median, over dimensions that are not forgotten (mean
    relevance at least ``eps_min`` of the largest), of IQR / mean relevance.
    Forgotten dimensions sit at the noise floor of the forgetting term, where
    relative spread says nothing about the series. The flag is raised when
    the score exceeds ``threshold``.
    """
    if profile.per_fold.shape[0] < 2:
        raise ValidationError("the stochasticity diagnostic needs at least two folds")
    mean = profile.mean
    if not np.any(mean > 0):
        return 0.0, False
    keep = mean >= eps_min * mean.max()
    iqr = profile.quartiles[keep, 3] - profile.quartiles[keep, 1]
    score = float(np.median(iqr / mean[keep]))
    return score, bool(score > threshold)
