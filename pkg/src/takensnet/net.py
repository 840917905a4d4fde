"""
Three-layer feedforward regressor trained with learning-with-forgetting.

Sigmoid hidden units, one output unit, squared error, and an L1 penalty on the
input-to-hidden weights only. Training is online backpropagation with
momentum; the per-sample inner loop is compiled with numba.

The cost minimised over a set of training rows is::

    C = sum_t 0.5 (yhat_t - y_t)^2 + lam * sum_ij |w_ij|

With ``penalty_per="epoch"`` (default) each online step carries
``lam / len(rows)`` of the penalty gradient, so one pass descends ``C`` as
written. ``penalty_per="sample"`` charges the full ``lam`` on every step,
which makes forgetting ``len(rows)`` times stronger.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

import numba
import numpy as np

from .embed import PevDataset
from .errors import DivergenceError, ValidationError

OUTPUTS = ("sigmoid", "identity")
PENALTY_SCOPES = ("epoch", "sample")


def hidden_size(n_inputs: int) -> int:
    """``ceil(ln N) + 1`` hidden units."""
    return int(math.ceil(math.log(n_inputs))) + 1


@dataclass
class NetConfig:
    n_inputs: int
    n_hidden: Optional[int] = None
    n_outputs: int = 1
    eta: float = 0.1
    alpha: float = 0.2
    lam: float = 0.001
    epochs: int = 500
    c_max: float = 0.001
    init_range: float = 0.1
    seed: int = 0
    shuffle: bool = True
    output: str = "sigmoid"
    penalty_per: str = "epoch"

    def __post_init__(self):
        if self.n_inputs < 1:
            raise ValidationError("n_inputs must be positive")
        if self.n_hidden is None:
            self.n_hidden = hidden_size(self.n_inputs)
        if self.n_hidden < 1:
            raise ValidationError("n_hidden must be positive")
        if self.n_outputs != 1:
            raise ValidationError("the network has exactly one output neuron")
        if self.eta < 0 or self.lam < 0:
            raise ValidationError("eta and lam must be non-negative")
        if not 0 <= self.alpha < 1:
            raise ValidationError("momentum rate must lie in [0, 1)")
        if self.epochs < 0:
            raise ValidationError("epochs must be non-negative")
        if self.init_range <= 0:
            raise ValidationError("init_range must be positive")
        if self.output not in OUTPUTS:
            raise ValidationError(f"output must be one of {OUTPUTS}")
        if self.penalty_per not in PENALTY_SCOPES:
            raise ValidationError(f"penalty_per must be one of {PENALTY_SCOPES}")

    def step_penalty(self, n_rows: int) -> float:
        """Penalty coefficient applied on each online step."""
        return self.lam / n_rows if self.penalty_per == "epoch" else self.lam


@dataclass
class Network:
    config: NetConfig
    w_in: np.ndarray  # (N, L)
    w_out: np.ndarray  # (L,)
    b_hidden: np.ndarray  # (L,)
    b_out: np.ndarray  # (1,), an array so the kernel can update it in place
    dw_in: np.ndarray = field(default=None)
    dw_out: np.ndarray = field(default=None)
    db_hidden: np.ndarray = field(default=None)
    db_out: np.ndarray = field(default=None)

    def __post_init__(self):
        N, L = self.config.n_inputs, self.config.n_hidden
        self.w_in = np.array(self.w_in, dtype=float).reshape(N, L)
        self.w_out = np.array(self.w_out, dtype=float).reshape(L)
        self.b_hidden = np.array(self.b_hidden, dtype=float).reshape(L)
        self.b_out = np.array(self.b_out, dtype=float).reshape(1)
        for name, ref in (("dw_in", self.w_in), ("dw_out", self.w_out),
                          ("db_hidden", self.b_hidden), ("db_out", self.b_out)):
            buf = getattr(self, name)
            buf = np.zeros_like(ref) if buf is None else np.array(buf, dtype=float).reshape(ref.shape)
            setattr(self, name, buf)
        if not all(np.all(np.isfinite(p)) for p in self.params):
            raise ValidationError("network weights must be finite")

    @property
    def params(self):
        return self.w_in, self.w_out, self.b_hidden, self.b_out

    def copy(self) -> "Network":
        return Network(
            self.config, self.w_in.copy(), self.w_out.copy(), self.b_hidden.copy(),
            self.b_out.copy(), self.dw_in.copy(), self.dw_out.copy(),
            self.db_hidden.copy(), self.db_out.copy(),
        )

    def to_dict(self) -> dict:
        return {
            "config": asdict(self.config),
            "w_in": self.w_in.tolist(),
            "w_out": self.w_out.tolist(),
            "b_hidden": self.b_hidden.tolist(),
            "b_out": float(self.b_out[0]),
            "momentum": {
                "w_in": self.dw_in.tolist(),
                "w_out": self.dw_out.tolist(),
                "b_hidden": self.db_hidden.tolist(),
                "b_out": float(self.db_out[0]),
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Network":
        m = d.get("momentum", {})
        return cls(
            NetConfig(**d["config"]), d["w_in"], d["w_out"], d["b_hidden"], d["b_out"],
            m.get("w_in"), m.get("w_out"), m.get("b_hidden"), m.get("b_out"),
        )

    def save(self, path) -> Path:
        # json emits repr() floats: shortest form that round-trips bit-exactly
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), indent=1), encoding="utf-8")
        return path

    @classmethod
    def load(cls, path) -> "Network":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass
class TrainReport:
    epochs_run: int
    cost_history: List[float]
    stop_reason: str  # "cost_reached" | "epoch_limit"

    @property
    def final_cost(self) -> float:
        return self.cost_history[-1] if self.cost_history else float("nan")

    def to_dict(self) -> dict:
        return {
            "epochs_run": self.epochs_run,
            "final_cost": self.final_cost,
            "stop_reason": self.stop_reason,
            "cost_history": list(self.cost_history),
        }


def init_network(config: NetConfig) -> Network:
    """Uniform ``[-init_range, init_range]`` weights and biases, zero momentum."""
    rng = np.random.default_rng(config.seed)
    N, L, r = config.n_inputs, config.n_hidden, config.init_range
    w_in = rng.uniform(-r, r, size=(N, L))
    w_out = rng.uniform(-r, r, size=L)
    b_hidden = rng.uniform(-r, r, size=L)
    b_out = rng.uniform(-r, r, size=1)
    return Network(config, w_in, w_out, b_hidden, b_out)


def _sigmoid(z):
    # tanh form cannot overflow
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def forward(net: Network, x) -> Tuple[np.ndarray, np.ndarray]:
    """Prediction and hidden activations for one input vector or a batch of rows."""
    x = np.asarray(x, dtype=float)
    h = _sigmoid(x @ net.w_in + net.b_hidden)
    out = h @ net.w_out + net.b_out[0]
    if net.config.output == "sigmoid":
        out = _sigmoid(out)
    return out, h


def predict(net: Network, X) -> np.ndarray:
    return forward(net, np.atleast_2d(X))[0]


def cost(net: Network, data: PevDataset, rows) -> float:
    """``C`` over ``rows``: summed half squared errors plus the forgetting penalty."""
    rows = np.asarray(rows)
    err = predict(net, data.inputs[rows]) - data.targets[rows]
    return float(0.5 * np.dot(err, err) + net.config.lam * np.abs(net.w_in).sum())


# ---------------------------------------------------------------------------
# compiled kernels

@numba.njit(cache=True, nogil=True)
def _sample_gradients(w_in, w_out, b_h, b_o, x, y, lam, sig_out, g_in, g_out, g_bh, g_bo):
    """Fill gradient buffers for ``0.5 (yhat - y)^2 + lam * sum|w_in|``; return the error term."""
    N, L = w_in.shape
    h = np.empty(L)
    o = b_o[0]
    for j in range(L):
        z = b_h[j]
        for i in range(N):
            z += x[i] * w_in[i, j]
        h[j] = 0.5 * (1.0 + math.tanh(0.5 * z))
        o += w_out[j] * h[j]
    if sig_out:
        yhat = 0.5 * (1.0 + math.tanh(0.5 * o))
        e = yhat - y
        delta = e * yhat * (1.0 - yhat)
    else:
        e = o - y
        delta = e
    g_bo[0] = delta
    for j in range(L):
        g_out[j] = delta * h[j]
        d = delta * w_out[j] * h[j] * (1.0 - h[j])
        g_bh[j] = d
        for i in range(N):
            w = w_in[i, j]
            s = 1.0 if w > 0.0 else (-1.0 if w < 0.0 else 0.0)
            g_in[i, j] = x[i] * d + lam * s
    return 0.5 * e * e


@numba.njit(cache=True, nogil=True)
def _epoch_kernel(w_in, w_out, b_h, b_o, m_in, m_out, m_bh, m_bo,
                  X, Y, order, eta, alpha, lam, sig_out):
    N, L = w_in.shape
    g_in = np.empty((N, L))
    g_out = np.empty(L)
    g_bh = np.empty(L)
    g_bo = np.empty(1)
    for r in order:
        _sample_gradients(w_in, w_out, b_h, b_o, X[r], Y[r], lam, sig_out, g_in, g_out, g_bh, g_bo)
        for j in range(L):
            for i in range(N):
                m_in[i, j] = -eta * g_in[i, j] + alpha * m_in[i, j]
                w_in[i, j] += m_in[i, j]
            m_out[j] = -eta * g_out[j] + alpha * m_out[j]
            w_out[j] += m_out[j]
            m_bh[j] = -eta * g_bh[j] + alpha * m_bh[j]
            b_h[j] += m_bh[j]
        m_bo[0] = -eta * g_bo[0] + alpha * m_bo[0]
        b_o[0] += m_bo[0]


def sample_gradients(net: Network, x, y: float, lam: float):
    """Analytic gradients of ``0.5 (yhat - y)^2 + lam * sum|w_in|`` for one sample.

    Returns ``(error_term, g_w_in, g_w_out, g_b_hidden, g_b_out)``.
    """
    N, L = net.w_in.shape
    g_in, g_out, g_bh, g_bo = np.empty((N, L)), np.empty(L), np.empty(L), np.empty(1)
    loss = _sample_gradients(net.w_in, net.w_out, net.b_hidden, net.b_out,
                             np.asarray(x, dtype=float), float(y), float(lam),
                             net.config.output == "sigmoid", g_in, g_out, g_bh, g_bo)
    return loss, g_in, g_out, g_bh, g_bo


# ---------------------------------------------------------------------------
# training

def epoch(net: Network, data: PevDataset, rows, config: Optional[NetConfig] = None) -> float:
    """One online pass over ``rows`` in the given order; returns ``C`` after the pass."""
    config = config or net.config
    rows = np.asarray(rows, dtype=np.int64)
    if rows.size == 0:
        raise ValidationError("cannot run an epoch over zero rows")
    _epoch_kernel(net.w_in, net.w_out, net.b_hidden, net.b_out,
                  net.dw_in, net.dw_out, net.db_hidden, net.db_out,
                  data.inputs, data.targets, rows,
                  float(config.eta), float(config.alpha),
                  float(config.step_penalty(rows.size)), config.output == "sigmoid")
    c = cost(net, data, rows)
    if not math.isfinite(c):
        raise DivergenceError(f"training diverged (cost={c}); try a smaller step size eta")
    return c


def train(data: PevDataset, rows, config: NetConfig,
          net: Optional[Network] = None) -> Tuple[Network, TrainReport]:
    """Train until ``C <= c_max`` or ``epochs`` passes have run.

    Rows are reshuffled before each epoch by a generator derived from
    ``config.seed`` but independent of the one that initialises the weights.
    """
    if data.n_inputs != config.n_inputs:
        raise ValidationError(
            f"dataset has {data.n_inputs} inputs, network expects {config.n_inputs}"
        )
    rows = np.asarray(rows, dtype=np.int64)
    if rows.size == 0:
        raise ValidationError("no training rows")
    net = init_network(config) if net is None else net
    shuffler = np.random.default_rng([config.seed, 1])
    history: List[float] = []
    reason = "epoch_limit"
    for _ in range(config.epochs):
        order = shuffler.permutation(rows) if config.shuffle else rows
        c = epoch(net, data, order, config)
        history.append(c)
        if c <= config.c_max:
            reason = "cost_reached"
            break
    return net, TrainReport(len(history), history, reason)


# ---------------------------------------------------------------------------
# verification

def _penalized_loss(net: Network, x, y, lam):
    # extended precision keeps the difference quotient's round-off well below
    # the tolerance; falls back to float64 where long double is the same type
    ld = np.longdouble
    w_in, w_out = net.w_in.astype(ld), net.w_out.astype(ld)
    b_h, b_o = net.b_hidden.astype(ld), ld(net.b_out[0])
    z = np.asarray(x, dtype=ld) @ w_in + b_h
    h = ld(0.5) * (ld(1) + np.tanh(ld(0.5) * z))
    out = h @ w_out + b_o
    if net.config.output == "sigmoid":
        out = ld(0.5) * (ld(1) + np.tanh(ld(0.5) * out))
    return ld(0.5) * (out - ld(y)) ** 2 + ld(lam) * np.abs(w_in).sum()


def gradient_check(net: Network, sample, lam: float, step: float = 1e-6) -> float:
    """Worst relative error between analytic and central-difference gradients.

    Works on a private copy of ``net``. Input weights should be bounded away
    from zero, where ``|w|`` has no derivative.
    """
    x, y = sample
    net = net.copy()
    _, *analytic = sample_gradients(net, x, y, lam)
    worst = 0.0
    for param, grad in zip(net.params, analytic):
        flat, gflat = param.reshape(-1), grad.reshape(-1)
        for k in range(flat.size):
            orig = flat[k]
            flat[k] = hi = orig + step
            up = _penalized_loss(net, x, y, lam)
            flat[k] = lo = orig - step
            down = _penalized_loss(net, x, y, lam)
            flat[k] = orig
            # divide by the step actually taken after rounding
            numeric = float((up - down) / (np.longdouble(hi) - np.longdouble(lo)))
            scale = max(abs(numeric), abs(gflat[k]))
            if scale > 0:
                worst = max(worst, abs(numeric - gflat[k]) / scale)
    return worst
