"""
Takens embedding parameters from a forgetting neural network.

A small feedforward network learns to predict the next observation of a
series from a dense window of past observations. An L1 forgetting penalty on
the input weights lets irrelevant lags decay, and the embedding dimension
``m`` and time delay ``tau`` are read off the surviving input relevances.

Modules:
- series: benchmark generators, CSV ingestion, normalization, noise, smoothing
- embed: delay vectors and resampling plans
- net: the network, its training loop and a gradient check
- estimate: relevance profiles, ``(m, tau)`` selection, stochasticity diagnostic
- forecast: single-step forecasts and error metrics
- pipeline / cli: reproducible end-to-end runs
"""

__version__ = "0.1.0"

from .embed import SearchSpace, build_pev, build_sev, make_resampling  # noqa: E402
from .estimate import (  # noqa: E402
    EmbeddingEstimate, RelevanceProfile, aggregate, relevance, select_embedding,
    stochasticity_diagnostic,
)
from .forecast import ForecastReport, forecast_eval, metrics  # noqa: E402
from .net import NetConfig, Network, init_network, train  # noqa: E402
from .series import SystemSpec, TimeSeries, generate, load_csv, normalize  # noqa: E402

__all__ = [
    "SearchSpace", "build_pev", "build_sev", "make_resampling",
    "EmbeddingEstimate", "RelevanceProfile", "aggregate", "relevance",
    "select_embedding", "stochasticity_diagnostic",
    "ForecastReport", "forecast_eval", "metrics",
    "NetConfig", "Network", "init_network", "train",
    "SystemSpec", "TimeSeries", "generate", "load_csv", "normalize",
]
