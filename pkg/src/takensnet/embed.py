"""Delay-vector construction and train/test resampling."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import List, Tuple

import numpy as np

from .errors import InsufficientDataError, ValidationError
from .series import TimeSeries


@dataclass(frozen=True)
class SearchSpace:
    """Maximum embedding bounds ``(m_max, tau_max)``.

    A provisional embedding vector spans ``(m_max - 1) * tau_max + 1``
    consecutive observations; all but the last feed the network.
    """

    m_max: int
    tau_max: int

    def __post_init__(self):
        if self.m_max < 2 or self.tau_max < 1:
            raise ValidationError("search space needs m_max >= 2 and tau_max >= 1")
        if self.pev_len < 3:
            raise ValidationError(f"PEV length {self.pev_len} < 3; widen the search space")

    @property
    def window(self) -> int:
        return (self.m_max - 1) * self.tau_max

    @property
    def pev_len(self) -> int:
        return self.window + 1

    @property
    def n_inputs(self) -> int:
        return self.pev_len - 1


@dataclass(frozen=True)
class PevDataset:
    inputs: np.ndarray  # (count, N)
    targets: np.ndarray  # (count,)
    source_indices: np.ndarray  # (count,)

    def __len__(self):
        return len(self.targets)

    @property
    def n_inputs(self) -> int:
        return self.inputs.shape[1]


@dataclass(frozen=True)
class ResamplingPlan:
    folds: List[Tuple[np.ndarray, np.ndarray]]
    train_fraction: float
    seed: int

    @property
    def fold_count(self) -> int:
        return len(self.folds)


def _readonly(a):
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


def build_pev(series: TimeSeries, space: SearchSpace) -> PevDataset:
    """Slide a ``pev_len`` window over the series.

    Row ``t`` holds ``x[t : t+N]`` and its target is ``x[t+N]``, i.e. the
    network always forecasts one step ahead.
    """
    x = series.values
    n, N = len(x), space.n_inputs
    if n <= space.pev_len:
        raise InsufficientDataError(
            f"search space {space.m_max, space.tau_max} needs at least "
            f"{space.pev_len + 1} observations, got {n}"
        )
    count = n - N
    idx = np.arange(count)[:, None] + np.arange(N)[None, :]
    return PevDataset(
        inputs=_readonly(x[idx]),
        targets=_readonly(x[N:]),
        source_indices=np.arange(count),
    )


def build_sev(series: TimeSeries, m: int, tau: int) -> np.ndarray:
    """Rows ``(x_t, x_{t+tau}, ..., x_{t+(m-1)tau})``."""
    if m < 1 or tau < 1:
        raise ValidationError("m and tau must be positive")
    x = np.asarray(series.values if isinstance(series, TimeSeries) else series, dtype=float)
    span = (m - 1) * tau
    if len(x) <= span:
        raise InsufficientDataError(
            f"(m={m}, tau={tau}) spans {span + 1} observations, series has {len(x)}"
        )
    rows = len(x) - span
    return x[np.arange(rows)[:, None] + tau * np.arange(m)[None, :]]


def write_phase_space(states: np.ndarray, path) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{i}" for i in range(states.shape[1])])
        w.writerows([[f"{v:.17g}" for v in row] for row in states])
    return path


def make_resampling(count: int, folds: int = 5, train_fraction: float = 0.75,
                    seed: int = 0) -> ResamplingPlan:
    """Independent uniform shuffles of ``range(count)``, each cut into train/test."""
    if not 1 <= folds <= count:
        raise ValidationError(f"need 1 <= folds <= count, got folds={folds}, count={count}")
    if not 0.0 < train_fraction < 1.0:
        raise ValidationError("train_fraction must lie strictly between 0 and 1")
    n_train = int(round(train_fraction * count))
    if n_train == 0 or n_train == count:
        raise ValidationError(
            f"train_fraction={train_fraction} on {count} rows leaves an empty split"
        )
    rng = np.random.default_rng(seed)
    plan = []
    for _ in range(folds):
        perm = rng.permutation(count)
        plan.append((perm[:n_train], perm[n_train:]))
    return ResamplingPlan(plan, train_fraction, seed)
