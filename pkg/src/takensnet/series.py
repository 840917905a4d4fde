"""
Benchmark series generation and univariate series plumbing.

Maps (logistic, Hénon) are iterated exactly, flows (Lorenz, Rössler) are
integrated with a fixed-step fourth-order Runge-Kutta scheme, and the
Gaussian generator provides the stochastic control case. Everything here is
pure given ``(spec, seed)``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .errors import (
    CSVParseError,
    DegenerateSeriesError,
    IntegrationBlowUpError,
    UnboundedOrbitError,
    ValidationError,
)

DIVERGENCE_LIMIT = 1e6


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TimeSeries:
    """Ordered real observations plus where they came from."""

    values: np.ndarray
    name: str = "series"
    sampling_time: Optional[float] = None
    seed: Optional[int] = None

    def __post_init__(self):
        values = _frozen(self.values)
        if values.ndim != 1:
            raise ValidationError("a TimeSeries is univariate")
        if len(values) < 2:
            raise ValidationError(f"a TimeSeries needs at least 2 observations, got {len(values)}")
        if not np.all(np.isfinite(values)):
            raise ValidationError("TimeSeries values must be finite")
        object.__setattr__(self, "values", values)

    def __len__(self):
        return len(self.values)

    def with_values(self, values, **changes) -> "TimeSeries":
        return replace(self, values=values, **changes)


# kind -> (degree of freedom, default parameters, default initial state)
SYSTEMS = {
    "logistic": (1, {"r": 3.8}, (0.5,)),
    "henon": (2, {"a": 1.4, "b": 0.3}, (0.0, 0.0)),
    "lorenz": (3, {"sigma": 10.0, "rho": 28.0, "beta": 8.0 / 3.0}, (1.0, 1.0, 1.0)),
    "rossler": (3, {"a": 0.2, "b": 0.2, "c": 5.7}, (1.0, 1.0, 1.0)),
    "gaussian": (1, {"mu": 0.0, "sigma": 1.0}, (0.0,)),
}
MAP_KINDS = ("logistic", "henon")
FLOW_KINDS = ("lorenz", "rossler")

# Expected (m-range, tau-range) per system, used for reporting only.
GROUND_TRUTH = {
    "logistic": ((2, 3), (1, 1)),
    "henon": ((2, 4), (1, 1)),
    "lorenz": ((2, 3), (5, 12)),
    "rossler": ((3, 3), (5, 12)),
}


@dataclass(frozen=True)
class SystemSpec:
    """Full description of a benchmark generator run."""

    kind: str
    parameters: Mapping[str, float] = field(default_factory=dict)
    initial_state: Optional[Sequence[float]] = None
    observed_coordinate: int = 0
    n: int = 1000
    sampling_time: float = 0.01
    transient: int = 1000
    seed: Optional[int] = None
    ground_truth: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in SYSTEMS:
            raise ValidationError(
                f"unknown system {self.kind!r}; choose from {', '.join(SYSTEMS)}"
            )
        dof, defaults, init = SYSTEMS[self.kind]
        params = dict(defaults)
        unknown = set(self.parameters) - set(defaults)
        if unknown:
            raise ValidationError(f"unknown parameters for {self.kind}: {sorted(unknown)}")
        params.update({k: float(v) for k, v in self.parameters.items()})
        object.__setattr__(self, "parameters", params)

        state = init if self.initial_state is None else tuple(float(v) for v in self.initial_state)
        if len(state) != dof:
            raise ValidationError(f"{self.kind} has {dof} state variables, got {len(state)}")
        object.__setattr__(self, "initial_state", tuple(state))

        if self.n < 1:
            raise ValidationError("n must be at least 1")
        if not 0 <= self.observed_coordinate < dof:
            raise ValidationError(
                f"observed_coordinate {self.observed_coordinate} out of range for d={dof}"
            )
        if self.kind in FLOW_KINDS and not self.sampling_time > 0:
            raise ValidationError("sampling_time must be positive for flows")
        if self.transient < 0:
            raise ValidationError("transient must be non-negative")
        if self.ground_truth is None and self.kind in GROUND_TRUTH:
            object.__setattr__(self, "ground_truth", GROUND_TRUTH[self.kind])

    @property
    def dof(self) -> int:
        return SYSTEMS[self.kind][0]


# ---------------------------------------------------------------------------
# maps

def logistic_step(state, r):
    (x,) = state
    return (r * x * (1.0 - x),)


def henon_step(state, a, b):
    x, y = state
    return (1.0 - a * x * x + y, b * x)


def generate_map(spec: SystemSpec) -> TimeSeries:
    """Iterate a discrete map and emit the observed coordinate.

    The first emitted value is the initial state itself, so ``values[1]`` is
    one application of the map. ``spec.transient`` iterations are discarded
    only for flows; maps start where they are told to.
    """
    if spec.kind not in MAP_KINDS:
        raise ValidationError(f"{spec.kind!r} is not a map")
    p = spec.parameters
    if spec.kind == "logistic":
        if not 0.0 < spec.initial_state[0] < 1.0:
            raise ValidationError("logistic initial state must lie in (0, 1)")
        step = lambda s: logistic_step(s, p["r"])  # noqa: E731
    else:
        step = lambda s: henon_step(s, p["a"], p["b"])  # noqa: E731

    state = spec.initial_state
    out = np.empty(spec.n)
    for t in range(spec.n):
        if any(abs(v) > DIVERGENCE_LIMIT or not math.isfinite(v) for v in state):
            raise UnboundedOrbitError(t, max(state, key=abs))
        out[t] = state[spec.observed_coordinate]
        state = step(state)
    return TimeSeries(out, name=spec.kind, seed=spec.seed)


# ---------------------------------------------------------------------------
# flows

def lorenz_field(sigma, rho, beta):
    def f(s):
        x, y, z = s
        return np.array([sigma * (y - x), x * (rho - z) - y, x * y - beta * z])
    return f


def rossler_field(a, b, c):
    def f(s):
        x, y, z = s
        return np.array([-y - z, x + a * y, b + z * (x - c)])
    return f


def rk4_step(f: Callable[[np.ndarray], np.ndarray], state: np.ndarray, h: float) -> np.ndarray:
    """One classical Runge-Kutta step of an autonomous field."""
    k1 = f(state)
    k2 = f(state + 0.5 * h * k1)
    k3 = f(state + 0.5 * h * k2)
    k4 = f(state + h * k3)
    return state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(f, state, h: float, steps: int) -> np.ndarray:
    """Return the ``(steps + 1, d)`` trajectory including the initial state."""
    traj = np.empty((steps + 1, len(state)))
    traj[0] = state = np.asarray(state, dtype=float)
    for i in range(1, steps + 1):
        state = rk4_step(f, state, h)
        if not np.all(np.isfinite(state)):
            raise IntegrationBlowUpError(i)
        traj[i] = state
    return traj


def generate_flow(spec: SystemSpec) -> TimeSeries:
    """Integrate a flow with step ``sampling_time`` and sample one coordinate.

    ``spec.transient`` steps are discarded first so that the samples lie on
    the attractor.
    """
    if spec.kind not in FLOW_KINDS:
        raise ValidationError(f"{spec.kind!r} is not a flow")
    fields = {"lorenz": lorenz_field, "rossler": rossler_field}
    f = fields[spec.kind](**spec.parameters)
    traj = integrate(f, spec.initial_state, spec.sampling_time, spec.transient + spec.n - 1)
    values = traj[spec.transient:, spec.observed_coordinate]
    return TimeSeries(values, name=spec.kind, sampling_time=spec.sampling_time, seed=spec.seed)


def generate_gaussian(spec: SystemSpec) -> TimeSeries:
    mu, sigma = spec.parameters["mu"], spec.parameters["sigma"]
    if sigma < 0:
        raise ValidationError("sigma must be non-negative")
    rng = np.random.default_rng(spec.seed)
    return TimeSeries(rng.normal(mu, sigma, size=spec.n), name="gaussian", seed=spec.seed)


def generate(spec: SystemSpec) -> TimeSeries:
    """Dispatch to the generator matching ``spec.kind``."""
    if spec.kind in MAP_KINDS:
        return generate_map(spec)
    if spec.kind in FLOW_KINDS:
        return generate_flow(spec)
    return generate_gaussian(spec)


# ---------------------------------------------------------------------------
# transforms

def add_noise(series: TimeSeries, mu: float, sigma: float, seed: int) -> TimeSeries:
    """Add i.i.d. Gaussian noise. Apply before :func:`normalize`."""
    if sigma < 0:
        raise ValidationError("sigma must be non-negative")
    if sigma == 0 and mu == 0:
        return series
    rng = np.random.default_rng(seed)
    noisy = series.values + rng.normal(mu, sigma, size=len(series))
    return series.with_values(noisy, name=f"{series.name}+N({mu:g},{sigma:g})")


def normalize(series: TimeSeries) -> TimeSeries:
    """Min-max scale onto [0, 1]."""
    x = series.values
    lo, hi = x.min(), x.max()
    if not hi > lo:
        raise DegenerateSeriesError(f"cannot normalize constant series {series.name!r}")
    scaled = (x - lo) / (hi - lo)
    # pin the extremes so min/max are exactly 0 and 1
    scaled[x == lo] = 0.0
    scaled[x == hi] = 1.0
    return series.with_values(np.clip(scaled, 0.0, 1.0))


def smooth_resample(series: TimeSeries, k: int = 100) -> TimeSeries:
    """Resample to ``k`` equally spaced points with Catmull-Rom interpolation.

    Ends are padded by linear extrapolation, so linear data is reproduced
    exactly.
    """
    x = series.values
    n = len(x)
    if not 2 <= k <= n:
        raise ValidationError(f"k must lie in [2, {n}], got {k}")
    if k == n:
        return series
    padded = np.concatenate([[2 * x[0] - x[1]], x, [2 * x[-1] - x[-2]]])
    u = np.linspace(0.0, n - 1, k)
    i = np.minimum(np.floor(u).astype(int), n - 2)
    s = u - i
    p0, p1, p2, p3 = padded[i], padded[i + 1], padded[i + 2], padded[i + 3]
    s2, s3 = s * s, s * s * s
    out = 0.5 * (
        2 * p1
        + (p2 - p0) * s
        + (2 * p0 - 5 * p1 + 4 * p2 - p3) * s2
        + (3 * p1 - p0 - 3 * p2 + p3) * s3
    )
    return series.with_values(out, name=f"{series.name}~{k}")


# ---------------------------------------------------------------------------
# I/O

def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def load_csv(path, column: int = 0) -> TimeSeries:
    """Read one column of reals from a comma-separated or one-per-line file.

    A non-numeric first row is treated as a header. Row numbers in errors are
    1-based file lines.
    """
    path = Path(path)
    if not path.is_file():
        raise CSVParseError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [(i, r) for i, r in enumerate(csv.reader(fh), start=1) if r and any(c.strip() for c in r)]
    if rows and column < len(rows[0][1]) and not _is_number(rows[0][1][column].strip()):
        rows = rows[1:]
    values = []
    for lineno, row in rows:
        if column >= len(row):
            raise CSVParseError(f"missing column {column}", row=lineno)
        cell = row[column].strip()
        try:
            values.append(float(cell))
        except ValueError:
            raise CSVParseError(f"cannot parse {cell!r} as a real number", row=lineno) from None
    if not values:
        raise CSVParseError(f"column {column} of {path} is empty")
    if len(values) < 2:
        raise CSVParseError(f"column {column} of {path} has fewer than 2 values")
    return TimeSeries(values, name=path.stem)


def write_csv(series: TimeSeries, path) -> Path:
    """One value per line, 17 significant digits (round-trips exactly)."""
    path = Path(path)
    path.write_text("".join(f"{v:.17g}\n" for v in series.values), encoding="utf-8")
    return path
