"""Command-line front end: ``qparrondo {quantum,classical,search,sweep,validate}``.

Every run writes into its own output directory: data files (CSV or JSON) plus
a ``manifest.json`` holding the resolved parameters. Passing that manifest
back with ``--manifest`` repeats the run and rewrites byte-identical files.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .classical import ClassicalParams, expected_gain_exact, monte_carlo
from .gates import REFERENCE_A, REFERENCE_B1, REFERENCE_B2, GateParams
from .oracle import MAX_QUBITS
from .quantum import CapitalOverflowError, QuantumGameConfig, run_strategy
from .search import rank_strategies, sign_changes, sweep_offsets
from .series import GainSeries, Strategy
from .validation import run_checks

EXIT_OK, EXIT_VALIDATION, EXIT_USAGE, EXIT_SIZING = 0, 1, 2, 3

GATES = {"a": REFERENCE_A, "b1": REFERENCE_B1, "b2": REFERENCE_B2}
ANGLES = ("delta", "alpha", "beta", "theta")
FORMULA_FLAGS = {"integer": "integer", "sigmaz": "sigma_z"}


def fmt(x: float) -> str:
    s = format(float(x), ".12g")
    return "0" if s == "-0" else s


def strategy_arg(text: str) -> str:
    try:
        return Strategy.parse(text).tokens
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def offsets_arg(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"offsets must be comma-separated integers, got {text!r}") from None


def _add_output_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", type=Path, default=None,
                   help="output directory (default: runs/<subcommand>-<timestamp>)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--manifest", type=Path, default=None,
                   help="re-run the parameters recorded in a manifest.json")


def _add_game_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("coin gates (radians, default: reference coefficients)")
    g.add_argument("--preset", choices=("table1",), default="table1")
    for gate, params in GATES.items():
        for angle in ANGLES:
            g.add_argument(f"--{angle}-{gate}", type=float, default=None,
                           help=f"default {getattr(params, angle):.12g}")
    p.add_argument("--b-mapping", choices=("paper", "classical"), default="paper",
                   help="which B coin plays on multiples of three: paper=B2, classical=B1")
    p.add_argument("--gain-formula", choices=tuple(FORMULA_FLAGS), default="integer")
    p.add_argument("--capital-qubits", type=int, default=None,
                   help="capital register size n (default: sized from the number of games)")
    p.add_argument("--iterations", type=int, default=400, help="strategy repetitions (default 400)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for multi-run commands")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qparrondo", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    q = sub.add_parser("quantum", help="run one strategy on the quantum circuit")
    q.add_argument("--strategy", type=strategy_arg, help="required unless --manifest is given")
    q.add_argument("--offset", type=int, default=0)
    _add_game_flags(q)
    _add_output_flags(q)

    c = sub.add_parser("classical", help="classical baseline: exact DP and optional Monte Carlo")
    c.add_argument("--strategy", type=strategy_arg, help="required unless --manifest is given")
    c.add_argument("--steps", type=int, default=500)
    c.add_argument("--epsilon", type=float, default=0.005)
    c.add_argument("--initial-capital", type=int, default=0)
    c.add_argument("--mc-trials", type=int, default=0, help="Monte Carlo trials (0 = exact only)")
    c.add_argument("--seed", type=int, default=0)
    _add_output_flags(c)

    s = sub.add_parser("search", help="rank every strategy of a given length")
    s.add_argument("--length", type=int, default=5)
    s.add_argument("--offsets", type=offsets_arg, default=[0, 3])
    s.add_argument("--b-mappings", type=lambda t: t.split(","), default=["paper", "classical"])
    s.add_argument("--gain-formulas", type=lambda t: t.split(","), default=["integer", "sigmaz"])
    _add_game_flags(s)
    _add_output_flags(s)

    w = sub.add_parser("sweep", help="one strategy across several offsets")
    w.add_argument("--strategy", type=strategy_arg, help="required unless --manifest is given")
    w.add_argument("--offsets", type=offsets_arg, default=[0, 3])
    _add_game_flags(w)
    _add_output_flags(w)

    v = sub.add_parser("validate", help="run the oracle-equivalence and invariant checks")
    v.add_argument("--max-qubits", type=int, default=9)
    return parser


def _gate_params(args: argparse.Namespace, gate: str) -> GateParams:
    base = GATES[gate]
    values = {}
    for angle in ANGLES:
        flag = getattr(args, f"{angle}_{gate}")
        values[angle] = getattr(base, angle) if flag is None else flag
    return GateParams(**values)


def _resolve_params(args: argparse.Namespace) -> dict[str, Any]:
    skip = {"subcommand", "out", "format", "manifest", "jobs"}
    params = {k: v for k, v in vars(args).items() if k not in skip}
    if hasattr(args, "preset"):
        for gate in GATES:
            for angle, value in _gate_params(args, gate).as_dict().items():
                params[f"{angle}_{gate}"] = value
    return params


def _config(params: dict[str, Any], offset: int = 0) -> QuantumGameConfig:
    gates = {g: GateParams(**{a: params[f"{a}_{g}"] for a in ANGLES}) for g in GATES}
    return QuantumGameConfig(
        params_a=gates["a"],
        params_b1=gates["b1"],
        params_b2=gates["b2"],
        capital_qubits=params["capital_qubits"],
        offset=offset,
        b_mapping=params["b_mapping"],
        gain_formula=FORMULA_FLAGS[params["gain_formula"]],
    )


def _csv_text(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
        fh.flush()


def _json_text(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def series_rows(series: GainSeries):
    if series.std_errors is None:
        return [(int(s), fmt(g)) for s, g in zip(series.steps, series.gains)]
    return [(int(s), fmt(g), fmt(e)) for s, g, e in zip(series.steps, series.gains, series.std_errors)]


def _series_payload(series: GainSeries, header: Sequence[str]) -> dict[str, Any]:
    return {"columns": list(header), "rows": [list(r) for r in series_rows(series)],
            "metadata": _jsonable(series.metadata)}


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "item"):
        return obj.item()
    return obj


class Run:
    """Output directory plus manifest for one invocation."""

    def __init__(self, args: argparse.Namespace, params: dict[str, Any], created_at: str):
        self.format = args.format
        self.manifest = {
            "tool_version": __version__,
            "subcommand": args.subcommand,
            "params": _jsonable(params),
            "seed": params.get("seed"),
            "created_at": created_at,
            "format": args.format,
        }
        stamp = created_at.replace(":", "").replace("-", "").split(".")[0]
        self.out = args.out or Path("runs") / f"{args.subcommand}-{stamp}"
        self.out.mkdir(parents=True, exist_ok=True)

    def series(self, name: str, series: GainSeries, header: Sequence[str] = ("step", "expected_gain")) -> Path:
        if self.format == "csv":
            path = self.out / f"{name}.csv"
            _write(path, _csv_text(header, series_rows(series)))
        else:
            path = self.out / f"{name}.json"
            _write(path, _json_text({"manifest": self.manifest, **_series_payload(series, header)}))
        return path

    def json(self, name: str, obj: Any) -> Path:
        path = self.out / f"{name}.json"
        _write(path, _json_text(_jsonable(obj)))
        return path

    def finish(self) -> None:
        _write(self.out / "manifest.json", _json_text(self.manifest))


def cmd_quantum(args, params, run: Run) -> int:
    config = _config(params, params["offset"])
    series = run_strategy(config, params["strategy"], params["iterations"])
    run.series("series", series)
    run.json("metadata", series.metadata)
    meta = series.metadata
    print(f"{meta['strategy']} offset={params['offset']} games={meta['games']} "
          f"n={meta['capital_qubits']} qubits={meta['total_qubits']} final_gain={fmt(series.final_gain)}")
    return EXIT_OK


def cmd_classical(args, params, run: Run) -> int:
    cp = ClassicalParams(params["epsilon"])
    exact = expected_gain_exact(params["strategy"], params["steps"], cp, params["initial_capital"])
    run.series("series", exact)
    line = f"{params['strategy']} steps={params['steps']} exact_final_gain={fmt(exact.final_gain)}"
    if params["mc_trials"] > 0:
        mc = monte_carlo(params["strategy"], params["steps"], params["mc_trials"], params["seed"], cp,
                         params["initial_capital"])
        run.series("monte_carlo", mc, ("step", "mean_gain", "std_error"))
        line += f" mc_final_gain={fmt(mc.final_gain)} +/- {fmt(mc.std_errors[-1])}"
    print(line)
    return EXIT_OK


def _check_conventions(params) -> None:
    for bm in params.get("b_mappings", []):
        if bm not in ("paper", "classical"):
            raise ValueError(f"unknown b-mapping {bm!r}")
    for f in params.get("gain_formulas", []):
        if f not in FORMULA_FLAGS:
            raise ValueError(f"unknown gain formula {f!r}")


def cmd_search(args, params, run: Run) -> int:
    _check_conventions(params)
    report = rank_strategies(
        params["length"], params["iterations"], params["offsets"], _config(params),
        b_mappings=params["b_mappings"],
        gain_formulas=[FORMULA_FLAGS[f] for f in params["gain_formulas"]],
        jobs=args.jobs,
    )
    flips = report.flip_keys()
    header = ("strategy", "offset", "b_mapping", "gain_formula", "capital_qubits", "rank",
              "final_gain", "winning", "sign_flip_across_offsets", "paper_target", "paper_match")
    rows = []
    for e in report.entries:
        target = e.paper_target
        rows.append((e.strategy, e.offset, e.b_mapping, e.gain_formula, e.capital_qubits, e.rank,
                     fmt(e.final_gain), int(e.final_gain > 0),
                     int((e.strategy, e.b_mapping, e.gain_formula) in flips),
                     "" if target is None else fmt(target), int(e.paper_match)))
        run.series(f"series/{e.strategy}_off{e.offset}_{e.b_mapping}_{e.gain_formula}", e.series)
    _write(run.out / "report.csv", _csv_text(header, rows))

    summary = {"conventions": []}
    single = {"A" * report.length, "B" * report.length}
    for bm, f in report.conventions():
        per_offset = {}
        for off in report.offsets:
            group = report.group(off, bm, f)
            per_offset[str(off)] = {
                "best": [[e.strategy, e.final_gain] for e in group[:2]],
                "winning_count": sum(e.final_gain > 0 for e in group),
                "single_game": {e.strategy: e.final_gain for e in group if e.strategy in single},
            }
        summary["conventions"].append({"b_mapping": bm, "gain_formula": f, "offsets": per_offset})
    summary["paper_matches"] = [
        [e.strategy, e.offset, e.b_mapping, e.gain_formula, e.final_gain] for e in report.paper_matches()
    ]
    summary["sign_flips"] = [list(k) for k in sorted(flips)]
    run.json("summary", summary)
    print(f"{len(report.entries)} runs, n={report.entries[0].capital_qubits}; "
          f"{len(summary['paper_matches'])} paper match(es); {len(flips)} sign flip(s)")
    for conv in summary["conventions"]:
        for off, info in conv["offsets"].items():
            best = ", ".join(f"{s} {fmt(g)}" for s, g in info["best"])
            print(f"  {conv['b_mapping']:9s} {conv['gain_formula']:7s} offset={off}: "
                  f"{info['winning_count']} winning; best {best}")
    return EXIT_OK


def cmd_sweep(args, params, run: Run) -> int:
    config = _config(params)
    series = sweep_offsets(params["strategy"], params["offsets"], params["iterations"], config, jobs=args.jobs)
    finals = {}
    for off, s in zip(params["offsets"], series):
        run.series(f"series_off{off}", s)
        finals[str(off)] = s.final_gain
    flip = sign_changes(series)
    run.json("summary", {"strategy": params["strategy"], "final_gains": finals, "sign_flip": flip,
                         "capital_qubits": series[0].metadata["capital_qubits"]})
    print(f"{params['strategy']} " + " ".join(f"offset={o}: {fmt(g)}" for o, g in finals.items())
          + f" sign_flip={flip}")
    return EXIT_OK


def cmd_validate(args) -> int:
    results = run_checks(args.max_qubits)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}" + (f"  ({r.detail})" if r.detail else ""))
    failed = [r.name for r in results if not r.passed]
    if failed:
        print("failed: " + ", ".join(failed))
        return EXIT_VALIDATION
    print(f"all {len(results)} checks passed")
    return EXIT_OK


COMMANDS = {"quantum": cmd_quantum, "classical": cmd_classical, "search": cmd_search, "sweep": cmd_sweep}


def _load_manifest(path: Path) -> dict[str, Any]:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.subcommand == "validate":
        if not 6 <= args.max_qubits <= MAX_QUBITS:
            parser.error(f"--max-qubits must be between 6 and {MAX_QUBITS} (dense oracle cap)")
        return cmd_validate(args)

    created_at = datetime.now(timezone.utc).isoformat(timespec="seconds")
    if args.manifest is not None:
        manifest = _load_manifest(args.manifest)
        if manifest.get("subcommand") != args.subcommand:
            parser.error(f"manifest is for {manifest.get('subcommand')!r}, not {args.subcommand!r}")
        params = manifest["params"]
        created_at = manifest["created_at"]
        args.format = manifest.get("format", args.format)
    else:
        if getattr(args, "strategy", "") is None:
            parser.error("the following arguments are required: --strategy")
        params = _resolve_params(args)
    if params.get("iterations", 1) < 1 or params.get("steps", 1) < 1:
        parser.error("--iterations and --steps must be positive")

    try:
        run = Run(args, params, created_at)
        code = COMMANDS[args.subcommand](args, params, run)
        run.finish()
        return code
    except CapitalOverflowError as exc:
        print(f"error: {exc} (minimum capital qubits: {exc.minimum_qubits})", file=sys.stderr)
        return EXIT_SIZING
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
