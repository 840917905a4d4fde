"""
Command-line front end.

Subcommands::

    takensnet generate lorenz --n 1000 --ts 0.01
    takensnet estimate --dataset logistic --mmax 5 --taumax 3
    takensnet forecast --dataset rossler --mmax 4 --taumax 5 --horizon 250
    takensnet phase-space --csv series.csv --m 2 --tau 1
    takensnet sweep --dataset lorenz --grid 5x3,7x2,3x8

Run settings come from defaults, then an optional ``--config`` key=value
file, then command-line flags. Results land in ``--outdir``, falling back to
``$TAKENSNET_OUTDIR`` and then ``./takensnet-out``.

Exit codes: 0 success, 2 usage or configuration error, 3 estimate flagged as
stochastic, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path
from typing import Dict, List, Optional

from . import __version__
from .embed import build_sev, write_phase_space
from .errors import (
    CSVParseError, DegenerateSeriesError, DivergenceError, InsufficientDataError,
    IntegrationBlowUpError, NoSignalError, TakensNetError, UnboundedOrbitError,
    ValidationError,
)
from .net import Network
from .pipeline import (
    RunConfig, RunResult, load_series, parse_grid, read_config_file, run_estimate,
    run_forecast, run_sweep,
)
from .report import forecast_chart, relevance_chart
from .series import SYSTEMS, SystemSpec, generate, write_csv

OUTDIR_ENV = "TAKENSNET_OUTDIR"
DEFAULT_OUTDIR = "takensnet-out"

EXIT_OK, EXIT_USAGE, EXIT_STOCHASTIC, EXIT_NUMERIC = 0, 2, 3, 4

_NUMERIC_ERRORS = (DivergenceError, IntegrationBlowUpError, UnboundedOrbitError,
                   NoSignalError, DegenerateSeriesError, FloatingPointError)

# flag dest -> RunConfig field, for flags whose names differ
_FLAG_TO_KEY = {"mmax": "m_max", "taumax": "tau_max", "ts": "sampling_time",
                "x0": "initial_state", "coordinate": "observed_coordinate",
                "hidden": "n_hidden"}


def resolve_outdir(explicit: Optional[str]) -> Path:
    out = Path(explicit or os.environ.get(OUTDIR_ENV) or DEFAULT_OUTDIR)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(obj, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")
    return path


def _log(msg: str):
    print(msg, file=sys.stderr)


# ---------------------------------------------------------------------------
# argument plumbing

def _add_run_args(p: argparse.ArgumentParser):
    """Flags shared by estimate, forecast, phase-space and sweep.

    All default to SUPPRESS so that only flags actually given override the
    config file.
    """
    S = argparse.SUPPRESS
    g = p.add_argument_group("data")
    g.add_argument("--config", default=S, help="key=value run configuration file")
    g.add_argument("--dataset", default=S, help=f"built-in system: {', '.join(SYSTEMS)}")
    g.add_argument("--csv", default=S, help="read the series from this CSV file")
    g.add_argument("--column", type=int, default=S, help="CSV column (0-based)")
    g.add_argument("--n", type=int, default=S, help="observations to generate")
    g.add_argument("--ts", type=float, default=S, help="flow sampling time")
    g.add_argument("--transient", type=int, default=S, help="integration steps discarded")
    g.add_argument("--param", action="append", default=S, metavar="NAME=VALUE",
                   help="system parameter override, repeatable")
    g.add_argument("--x0", default=S, help="initial state, comma separated")
    g.add_argument("--coordinate", type=int, default=S, help="observed state coordinate")
    g.add_argument("--noise-sigma", type=float, default=S, help="additive Gaussian noise sd")
    g.add_argument("--noise-mu", type=float, default=S, help="additive Gaussian noise mean")
    g.add_argument("--smooth", type=int, default=S,
                   help="resample to this many points before estimation")
    g.add_argument("--seed", type=int, default=S, help="master seed")

    g = p.add_argument_group("search and selection")
    g.add_argument("--mmax", type=int, default=S, help="maximum embedding dimension")
    g.add_argument("--taumax", type=int, default=S, help="maximum time delay")
    g.add_argument("--eps-max", type=float, default=S, help="relevance quantile for m (0.8)")
    g.add_argument("--eps-min", type=float, default=S, help="forgetting floor, fraction of top (0.1)")
    g.add_argument("--folds", type=int, default=S)
    g.add_argument("--train-fraction", type=float, default=S)

    g = p.add_argument_group("network")
    g.add_argument("--hidden", type=int, default=S, help="hidden units (ceil(ln N) + 1)")
    g.add_argument("--eta", type=float, default=S)
    g.add_argument("--alpha", type=float, default=S)
    g.add_argument("--lam", type=float, default=S, help="forgetting strength")
    g.add_argument("--epochs", type=int, default=S)
    g.add_argument("--c-max", type=float, default=S)
    g.add_argument("--init-range", type=float, default=S)
    g.add_argument("--output", choices=("sigmoid", "identity"), default=S)
    g.add_argument("--penalty-per", choices=("epoch", "sample"), default=S)

    g = p.add_argument_group("execution")
    g.add_argument("--workers", type=int, default=S, help="concurrent training threads")
    g.add_argument("--outdir", default=S, help=f"output directory (${OUTDIR_ENV})")


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """Defaults, then ``--config`` file, then flags."""
    given = vars(args)
    mapping: Dict[str, object] = {}
    if "config" in given:
        mapping.update(read_config_file(given["config"]))
    for dest, value in given.items():
        if dest in ("config", "command", "func", "horizon", "snapshot", "save_net",
                    "grid", "m", "tau", "out", "replay"):
            continue
        if dest == "param":
            for item in value:
                if "=" not in item:
                    raise ValidationError(f"--param expects NAME=VALUE, got {item!r}")
                k, v = item.split("=", 1)
                mapping[f"param.{k.strip()}"] = v
            continue
        mapping[_FLAG_TO_KEY.get(dest, dest)] = value
    return RunConfig.from_mapping(mapping)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="takensnet",
        description="Estimate Takens embedding parameters with a forgetting neural network.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a benchmark series to CSV")
    p.add_argument("system", help=f"one of {', '.join(SYSTEMS)}")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--ts", type=float, default=0.01, help="flow sampling time")
    p.add_argument("--transient", type=int, default=1000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--param", action="append", default=[], metavar="NAME=VALUE")
    p.add_argument("--x0", default=None, help="initial state, comma separated")
    p.add_argument("--coordinate", type=int, default=0)
    p.add_argument("--out", default=None, help="CSV path (default OUTDIR/<system>.csv)")
    p.add_argument("--outdir", default=None)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("estimate", help="estimate (m, tau) by resampled training")
    _add_run_args(p)
    p.add_argument("--replay", default=argparse.SUPPRESS,
                   help="re-run the configuration recorded in an estimate.json")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("forecast", help="single-step forecast over the final rows")
    _add_run_args(p)
    p.add_argument("--horizon", type=int, default=250)
    p.add_argument("--snapshot", default=None, help="evaluate this saved network instead of training")
    p.add_argument("--save-net", action="store_true", help="write the trained network as JSON")
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("phase-space", help="export delay vectors (m, tau) as CSV")
    _add_run_args(p)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--tau", type=int, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_phase_space)

    p = sub.add_parser("sweep", help="estimate over a grid of search spaces")
    _add_run_args(p)
    p.add_argument("--grid", required=True, help="comma list of MxT, e.g. 5x3,7x2,3x8")
    p.set_defaults(func=cmd_sweep)
    return parser


# ---------------------------------------------------------------------------
# commands

def _parse_params(items: List[str]) -> Dict[str, float]:
    out = {}
    for item in items:
        if "=" not in item:
            raise ValidationError(f"--param expects NAME=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        try:
            out[k.strip()] = float(v)
        except ValueError as exc:
            raise ValidationError(f"--param {k.strip()}: not a number: {v!r}") from exc
    return out


def cmd_generate(args) -> int:
    x0 = None if args.x0 is None else [float(v) for v in args.x0.split(",")]
    spec = SystemSpec(args.system, parameters=_parse_params(args.param), initial_state=x0,
                      observed_coordinate=args.coordinate, n=args.n,
                      sampling_time=args.ts, transient=args.transient, seed=args.seed)
    ts = generate(spec)
    path = Path(args.out) if args.out else resolve_outdir(args.outdir) / f"{args.system}.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    write_csv(ts, path)
    meta = {
        "kind": spec.kind, "parameters": dict(spec.parameters),
        "initial_state": list(spec.initial_state),
        "observed_coordinate": spec.observed_coordinate, "n": spec.n,
        "sampling_time": spec.sampling_time, "transient": spec.transient,
        "seed": spec.seed, "ground_truth": spec.ground_truth, "version": __version__,
    }
    _write_json(meta, path.with_suffix(".json"))
    _log(f"wrote {len(ts)} values to {path}")
    return EXIT_OK


def write_estimate(result: RunResult, outdir: Path, title: str = "") -> Dict[str, Path]:
    outdir.mkdir(parents=True, exist_ok=True)
    return {
        "json": _write_json(result.to_dict(), outdir / "estimate.json"),
        "csv": result.profile.write_csv(outdir / "relevance.csv"),
        "svg": relevance_chart(result.profile, result.estimate, outdir / "relevance.svg", title),
    }


def _summary(cfg: RunConfig, result: RunResult) -> str:
    est = result.estimate
    score = "n/a" if est.stochastic_score is None else f"{est.stochastic_score:.3f}"
    line = (f"{cfg.csv or cfg.dataset} MEB ({cfg.m_max},{cfg.tau_max}): "
            f"m={est.m} tau={est.tau} (j={est.j}, k={est.k}) stochastic score {score}")
    if est.stochastic_flag:
        line += " FLAGGED: relevances vary too much across folds to trust this estimate"
    return line


def cmd_estimate(args) -> int:
    if "replay" in vars(args):
        cfg = RunConfig.from_provenance(args.replay)
        if "outdir" in vars(args):
            cfg = cfg.replace(outdir=args.outdir)
    else:
        cfg = config_from_args(args)
    result = run_estimate(cfg)
    outdir = resolve_outdir(cfg.outdir)
    files = write_estimate(result, outdir, title=cfg.csv or cfg.dataset)
    print(_summary(cfg, result))
    _log(f"wrote {', '.join(str(p) for p in files.values())}")
    return EXIT_STOCHASTIC if result.estimate.stochastic_flag else EXIT_OK


def cmd_forecast(args) -> int:
    cfg = config_from_args(args)
    net = Network.load(args.snapshot) if args.snapshot else None
    fc, net, report, prov = run_forecast(cfg, args.horizon, net)
    outdir = resolve_outdir(cfg.outdir)
    fc.write_csv(outdir / "forecast.csv")
    forecast_chart(fc, outdir / "forecast.svg", title=cfg.csv or cfg.dataset)
    out = {"forecast": fc.to_dict(), "provenance": prov}
    if report is not None:
        out["training"] = {k: v for k, v in report.to_dict().items() if k != "cost_history"}
    if args.snapshot:
        out["snapshot"] = str(args.snapshot)
    _write_json(out, outdir / "forecast.json")
    if args.save_net:
        net.save(outdir / "network.json")
    print(f"horizon {fc.horizon}: mse={fc.mse:.6g} nrmse={fc.nrmse:.6g}")
    return EXIT_OK


def cmd_phase_space(args) -> int:
    cfg = config_from_args(args)
    states = build_sev(load_series(cfg), args.m, args.tau)
    path = Path(args.out) if args.out else resolve_outdir(cfg.outdir) / "phase_space.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    write_phase_space(states, path)
    _log(f"wrote {states.shape[0]} states of dimension {states.shape[1]} to {path}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = config_from_args(args)
    grid = parse_grid(args.grid)
    results = run_sweep(cfg, grid)
    outdir = resolve_outdir(cfg.outdir)
    rows = []
    for (m_max, tau_max), res in results:
        sub = outdir / f"meb_{m_max}x{tau_max}"
        write_estimate(res, sub, title=f"{cfg.csv or cfg.dataset} ({m_max},{tau_max})")
        est = res.estimate
        rows.append({
            "m_max": m_max, "tau_max": tau_max, "n_inputs": res.profile.n_dims,
            "m": est.m, "tau": est.tau, "j": est.j, "k": est.k,
            "stochastic_score": est.stochastic_score, "stochastic_flag": est.stochastic_flag,
        })
        print(_summary(cfg.replace(m_max=m_max, tau_max=tau_max), res))
    with (outdir / "sweep.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    _write_json({"config": cfg.to_dict(), "grid": [list(g) for g in grid], "results": rows},
                outdir / "sweep.json")
    return EXIT_STOCHASTIC if any(r["stochastic_flag"] for r in rows) else EXIT_OK


# ---------------------------------------------------------------------------

def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with 2 on usage errors
    try:
        return args.func(args)
    except _NUMERIC_ERRORS as exc:
        stage = getattr(exc, "stage", "numeric")
        _log(f"takensnet: numerical failure in {stage}: {exc}")
        return EXIT_NUMERIC
    except (ValidationError, CSVParseError, InsufficientDataError) as exc:
        _log(f"takensnet: {exc.stage} error: {exc}")
        return EXIT_USAGE
    except TakensNetError as exc:
        _log(f"takensnet: {exc.stage} error: {exc}")
        return EXIT_USAGE
    except OSError as exc:
        _log(f"takensnet: io error: {exc}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
