"""
End-to-end runs: series -> PEV dataset -> per-fold training -> (m, tau).

A :class:`RunConfig` fully determines a run. Every seed is derived from the
master seed (fold ``f`` initialises and shuffles with ``seed + f``), so the
provenance block written next to each result is enough to rebuild it bit for
bit.
"""
from __future__ import annotations

import dataclasses
import json
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .embed import PevDataset, SearchSpace, build_pev, make_resampling
from .errors import ValidationError
from .estimate import (
    DEFAULT_EPS_MAX, DEFAULT_EPS_MIN, EmbeddingEstimate, RelevanceProfile,
    aggregate, relevance, select_embedding,
)
from .forecast import ForecastReport, forecast_eval
from .net import NetConfig, Network, TrainReport, train
from .series import (
    SYSTEMS, SystemSpec, TimeSeries, add_noise, generate, load_csv, normalize,
    smooth_resample,
)

# output units used when a run leaves ``output`` unset; the sigmoid keeps the
# relevance profile sharp, the identity unit reaches the ends of [0, 1]
ESTIMATE_OUTPUT = "sigmoid"
FORECAST_OUTPUT = "identity"

# NetConfig fields a run may override; everything else is derived
NET_KEYS = ("n_hidden", "eta", "alpha", "lam", "epochs", "c_max", "init_range",
            "shuffle", "output", "penalty_per")


def _parse_bool(text) -> bool:
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValidationError(f"not a boolean: {text!r}")


def _opt_int(text):
    return None if text in (None, "", "none", "None") else int(text)


def _opt_str(text):
    return None if text in (None, "", "none", "None") else str(text)


def _floats(text):
    if text in (None, "", "none", "None"):
        return None
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    return tuple(float(v) for v in str(text).split(","))


@dataclass
class RunConfig:
    """Everything needed to reproduce an estimation or forecasting run.

    ``dataset`` names a built-in system; when ``csv`` is set the series is
    read from that file instead and ``dataset`` only labels it. System
    parameters missing from ``params`` take the standard values.

    ``output`` left as None picks the output unit per task: sigmoid for
    estimation, identity for forecasting. Runs record the resolved value.
    """

    dataset: str = "logistic"
    csv: Optional[str] = None
    column: int = 0
    n: int = 1000
    sampling_time: float = 0.01
    transient: int = 1000
    params: Dict[str, float] = field(default_factory=dict)
    initial_state: Optional[Tuple[float, ...]] = None
    observed_coordinate: int = 0
    m_max: int = 5
    tau_max: int = 3
    eps_max: float = DEFAULT_EPS_MAX
    eps_min: float = DEFAULT_EPS_MIN
    folds: int = 5
    train_fraction: float = 0.75
    seed: int = 0
    noise_mu: float = 0.0
    noise_sigma: float = 0.0
    smooth: Optional[int] = None
    n_hidden: Optional[int] = None
    eta: float = 0.1
    alpha: float = 0.2
    lam: float = 0.001
    epochs: int = 500
    c_max: float = 0.001
    init_range: float = 0.1
    shuffle: bool = True
    output: Optional[str] = None
    penalty_per: str = "epoch"
    workers: int = 1
    outdir: Optional[str] = None

    _CONVERT = {
        "dataset": str, "csv": _opt_str, "column": int, "n": int,
        "sampling_time": float, "transient": int, "initial_state": _floats,
        "observed_coordinate": int, "m_max": int, "tau_max": int,
        "eps_max": float, "eps_min": float, "folds": int,
        "train_fraction": float, "seed": int, "noise_mu": float,
        "noise_sigma": float, "smooth": _opt_int, "n_hidden": _opt_int,
        "eta": float, "alpha": float, "lam": float, "epochs": int,
        "c_max": float, "init_range": float, "shuffle": _parse_bool,
        "output": _opt_str, "penalty_per": str, "workers": int, "outdir": _opt_str,
    }

    def __post_init__(self):
        if self.csv is None and self.dataset not in SYSTEMS:
            raise ValidationError(
                f"unknown dataset {self.dataset!r}; choose one of {sorted(SYSTEMS)} or give a CSV path"
            )
        if not 0.0 < self.eps_min < self.eps_max <= 1.0:
            raise ValidationError("thresholds must satisfy 0 < eps_min < eps_max <= 1")
        if self.folds < 1:
            raise ValidationError("folds must be at least 1")
        if self.noise_sigma < 0:
            raise ValidationError("noise_sigma must be non-negative")
        if self.workers < 1:
            raise ValidationError("workers must be at least 1")
        self.params = {str(k): float(v) for k, v in self.params.items()}
        if self.initial_state is not None:
            self.initial_state = tuple(float(v) for v in self.initial_state)
        # fail early on bad search spaces and network settings
        self.net_config(0)

    @property
    def space(self) -> SearchSpace:
        return SearchSpace(self.m_max, self.tau_max)

    def net_config(self, seed: int) -> NetConfig:
        kw = {k: getattr(self, k) for k in NET_KEYS}
        kw["output"] = kw["output"] or ESTIMATE_OUTPUT
        return NetConfig(self.space.n_inputs, seed=seed, **kw)

    def fold_seed(self, fold: int) -> int:
        return self.seed + fold

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}
        d["params"] = dict(self.params)
        d["initial_state"] = None if self.initial_state is None else list(self.initial_state)
        return d

    @classmethod
    def from_mapping(cls, mapping: dict) -> "RunConfig":
        """Build from string or typed values; ``param.NAME`` keys set system parameters."""
        kwargs, params = {}, {}
        for key, value in mapping.items():
            key = key.strip().replace("-", "_")
            if key.startswith("param."):
                params[key[len("param."):]] = float(value)
            elif key == "params":
                params.update({k: float(v) for k, v in dict(value).items()})
            elif key in cls._CONVERT:
                try:
                    kwargs[key] = cls._CONVERT[key](value)
                except (TypeError, ValueError) as exc:
                    raise ValidationError(f"bad value for {key}: {value!r}") from exc
            else:
                raise ValidationError(f"unknown configuration key {key!r}")
        if params:
            kwargs["params"] = params
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        return cls.from_mapping(read_config_file(path))

    @classmethod
    def from_provenance(cls, path) -> "RunConfig":
        """Rebuild the effective configuration of a finished run from its JSON report."""
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        block = data.get("provenance", data)
        if "config" not in block:
            raise ValidationError(f"{path} has no provenance block")
        return cls.from_mapping(block["config"])


def read_config_file(path) -> Dict[str, str]:
    """Flat ``key = value`` text; ``#`` starts a comment, blank lines are skipped."""
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"config file not found: {path}")
    out = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    return out


@dataclass
class RunResult:
    estimate: EmbeddingEstimate
    profile: RelevanceProfile
    train_reports: List[TrainReport]
    networks: List[Network]
    provenance: dict
    forecast: Optional[ForecastReport] = None

    def to_dict(self, histories: bool = False) -> dict:
        reports = []
        for f, r in enumerate(self.train_reports):
            d = r.to_dict()
            if not histories:
                d.pop("cost_history")
            reports.append({"fold": f, **d})
        out = {
            "estimate": self.estimate.to_dict(),
            "relevance": {
                "mean": self.profile.mean.tolist(),
                "per_fold": self.profile.per_fold.tolist(),
            },
            "folds": reports,
            "provenance": self.provenance,
        }
        if self.forecast is not None:
            out["forecast"] = self.forecast.to_dict()
        return out


# ---------------------------------------------------------------------------

def load_series(cfg: RunConfig) -> TimeSeries:
    """Generate or read the raw series, add noise, optionally smooth, then normalize."""
    if cfg.csv is not None:
        ts = load_csv(cfg.csv, cfg.column)
    else:
        spec = SystemSpec(
            cfg.dataset, parameters=cfg.params, initial_state=cfg.initial_state,
            observed_coordinate=cfg.observed_coordinate, n=cfg.n,
            sampling_time=cfg.sampling_time, transient=cfg.transient, seed=cfg.seed,
        )
        ts = generate(spec)
    if cfg.noise_sigma > 0 or cfg.noise_mu != 0:
        ts = add_noise(ts, cfg.noise_mu, cfg.noise_sigma, cfg.seed)
    if cfg.smooth is not None:
        ts = smooth_resample(ts, cfg.smooth)
    return normalize(ts)


def _provenance(cfg: RunConfig, started: float, **extra) -> dict:
    return {
        "config": cfg.to_dict(),
        "fold_seeds": [cfg.fold_seed(f) for f in range(cfg.folds)],
        "resampling_seed": cfg.seed,
        "noise_seed": cfg.seed,
        "wall_time_s": round(time.perf_counter() - started, 3),
        "version": __version__,
        "numpy": np.__version__,
        "python": platform.python_version(),
        **extra,
    }


def _train_fold(cfg: RunConfig, data: PevDataset, rows, fold: int):
    return train(data, rows, cfg.net_config(cfg.fold_seed(fold)))


def run_estimate(cfg: RunConfig) -> RunResult:
    """Train one network per resampling fold and read ``(m, tau)`` off the mean relevance."""
    started = time.perf_counter()
    cfg = cfg.replace(output=cfg.output or ESTIMATE_OUTPUT)
    series = load_series(cfg)
    data = build_pev(series, cfg.space)
    plan = make_resampling(len(data), cfg.folds, cfg.train_fraction, cfg.seed)
    jobs = [(cfg, data, train_rows, f) for f, (train_rows, _) in enumerate(plan.folds)]
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            trained = list(pool.map(lambda a: _train_fold(*a), jobs))
    else:
        trained = [_train_fold(*a) for a in jobs]
    nets = [net for net, _ in trained]
    reports = [rep for _, rep in trained]
    profile = aggregate([relevance(net) for net in nets])
    estimate = select_embedding(profile, cfg.eps_max, cfg.eps_min)
    prov = _provenance(cfg, started, series_length=len(series), rows=len(data))
    return RunResult(estimate, profile, reports, nets, prov)


def forecast_split(count: int, horizon: int) -> Tuple[np.ndarray, np.ndarray]:
    """Train on every row before the last ``horizon`` rows; hold those out."""
    if horizon < 1:
        raise ValidationError(f"horizon must be at least 1, got {horizon}")
    if horizon >= count:
        raise ValidationError(f"horizon {horizon} leaves no training rows out of {count}")
    cut = count - horizon
    return np.arange(cut), np.arange(cut, count)


def run_forecast(cfg: RunConfig, horizon: int = 250,
                 net: Optional[Network] = None) -> Tuple[ForecastReport, Network, Optional[TrainReport], dict]:
    """Single-step forecast over the final ``horizon`` rows of the series.

    Without ``net`` a network is trained on all earlier rows with the master
    seed. A supplied network is evaluated as is.
    """
    started = time.perf_counter()
    cfg = cfg.replace(output=cfg.output or FORECAST_OUTPUT)
    data = build_pev(load_series(cfg), cfg.space)
    train_rows, test_rows = forecast_split(len(data), horizon)
    report = None
    if net is None:
        net, report = train(data, train_rows, cfg.net_config(cfg.seed))
    elif net.config.n_inputs != data.n_inputs:
        raise ValidationError(
            f"network expects {net.config.n_inputs} inputs; search space gives {data.n_inputs}"
        )
    fc = forecast_eval(net, data, test_rows, horizon)
    prov = _provenance(cfg, started, horizon=horizon, train_rows=int(train_rows.size),
                       trained=report is not None)
    return fc, net, report, prov


def parse_grid(text: str) -> List[Tuple[int, int]]:
    """``"5x3,7x2"`` -> ``[(5, 3), (7, 2)]``."""
    grid = []
    for item in text.replace(" ", "").split(","):
        if not item:
            continue
        try:
            m, t = item.lower().split("x")
            grid.append((int(m), int(t)))
        except ValueError as exc:
            raise ValidationError(f"bad grid point {item!r}; expected MxT like 5x3") from exc
    if not grid:
        raise ValidationError("empty search-space grid")
    return grid


def run_sweep(cfg: RunConfig, grid: Sequence[Tuple[int, int]]) -> List[Tuple[Tuple[int, int], RunResult]]:
    """One full estimation per ``(m_max, tau_max)``; points run concurrently when ``workers > 1``."""
    configs = [cfg.replace(m_max=m, tau_max=t) for m, t in grid]
    if cfg.workers > 1:
        # folds inside each point stay serial so the pool is not oversubscribed
        configs = [c.replace(workers=1) for c in configs]
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(run_estimate, configs))
    else:
        results = [run_estimate(c) for c in configs]
    return list(zip(grid, results))
