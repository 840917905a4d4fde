"""Single-step forecasting on held-out rows and its error metrics."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Tuple

import numpy as np

from .embed import PevDataset
from .errors import ValidationError
from .net import Network, predict


@dataclass(frozen=True)
class ForecastReport:
    predictions: np.ndarray
    targets: np.ndarray
    mse: float
    nrmse: float
    horizon: int

    def to_dict(self) -> dict:
        return {"horizon": self.horizon, "mse": self.mse, "nrmse": self.nrmse}

    def write_csv(self, path) -> Path:
        """Overlay table with columns ``step, predicted, expected``."""
        path = Path(path)
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "predicted", "expected"])
            for i, (p, t) in enumerate(zip(self.predictions, self.targets)):
                w.writerow([i, f"{p:.17g}", f"{t:.17g}"])
        return path


def metrics(predictions, targets) -> Tuple[float, float]:
    """Mean squared error and RMSE divided by the target range.

    Raises
    ------
    ValidationError
        Lengths differ or are zero, or the targets are constant.
    """
    p = np.asarray(predictions, dtype=float)
    t = np.asarray(targets, dtype=float)
    if p.shape != t.shape or p.ndim != 1 or p.size == 0:
        raise ValidationError("predictions and targets must be equal-length non-empty vectors")
    spread = float(t.max() - t.min())
    if spread <= 0:
        raise ValidationError("targets are constant; nrmse is undefined")
    mse = float(np.mean((p - t) ** 2))
    return mse, math.sqrt(mse) / spread


def forecast_eval(net: Network, data: PevDataset, rows, horizon: int) -> ForecastReport:
    """Predict one step ahead from true observations on the first ``horizon`` rows.

    ``rows`` are put in time order first, so consecutive predictions trace a
    trajectory. Neither ``net`` nor ``data`` is modified.
    """
    rows = np.sort(np.asarray(rows, dtype=np.int64))
    if horizon < 1:
        raise ValidationError(f"horizon must be at least 1, got {horizon}")
    if horizon > rows.size:
        raise ValidationError(f"horizon {horizon} exceeds the {rows.size} available rows")
    rows = rows[:horizon]
    pred = np.asarray(predict(net, data.inputs[rows]), dtype=float)
    targets = np.array(data.targets[rows], dtype=float)
    mse, nrmse = metrics(pred, targets)
    return ForecastReport(pred, targets, mse, nrmse, horizon)
