"""Command-line pipeline.

Subcommands: discover | reduce | analyze | sweep | synth | report. ``sweep``
is the flagship path: it discovers (or ingests) the lag graph, optionally
prunes the distant node sets, runs the (tau, order, k) grid, and writes
plot-ready CSV plus a run manifest. All artifacts land inside the
configured output directory and reruns with identical inputs are
byte-identical.

Exit codes: 0 success, 2 config error, 3 data error, 4 estimation failure,
5 internal invariant violation.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .analysis import (
    SweepConfig,
    analyze_at_lag,
    read_sweep_csv,
    sweep,
    write_sweep_csv,
)
from .discovery import DiscoveryConfig, discover_graph, format_report
from .errors import BundleInfoError, ConfigError
from .estimators import EstimatorConfig
from .graph_reduction import prune_distant_sources
from .pid import PIDResult
from .synth import LinearVARSpec, gen_linear_var
from .timeseries import TimeSeriesSet, load_csv, save_csv
from .tsgraph import BundleSpec, Order, StationaryGraph, load_graph, save_graph

_PLOT_COMPONENTS = ("R_J", "S_J", "Um_J", "Un_J", "R_D", "S_D", "Um_D", "Un_D")


@dataclass(frozen=True)
class RunConfig:
    """Validated contents of a run configuration file."""

    data_path: Path
    missing_token: str
    graph_path: Path | None
    bundles: BundleSpec
    output_dir: Path
    seed: int
    sweep: SweepConfig
    discovery: DiscoveryConfig | None
    config_sha256: str


def _require(condition: bool, message: str, hint: str | None = None):
    if not condition:
        raise ConfigError(message, module="cli", operation="load_run_config",
                          hint=hint)


def load_run_config(path) -> RunConfig:
    """Parse and validate a JSON run configuration.

    Validation happens before any estimation: referenced variables must
    exist in the data header, bundles must be disjoint and non-empty, and a
    graph file (when given) must cover the same variables.
    """
    path = Path(path)
    raw_bytes = path.read_bytes()
    try:
        doc = json.loads(raw_bytes.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}",
                          module="cli", operation="load_run_config") from exc
    _require(isinstance(doc, dict), "config must be a JSON object")
    known_keys = {"data", "missing_token", "graph", "target", "bundle_m",
                  "bundle_n", "seed", "output_dir", "sweep", "discovery"}
    unknown = set(doc) - known_keys
    _require(not unknown, f"unknown config keys {sorted(unknown)}")
    for key in ("data", "target", "bundle_m", "bundle_n", "output_dir"):
        _require(key in doc, f"config key {key!r} is required")

    base = path.parent
    data_path = (base / doc["data"]).resolve() if not Path(doc["data"]).is_absolute() \
        else Path(doc["data"])
    _require(data_path.exists(), f"data file {data_path} does not exist")
    missing_token = str(doc.get("missing_token", ""))
    seed = int(doc.get("seed", 0))
    _require(seed >= 0, "seed must be a non-negative integer")

    graph_path = None
    if doc.get("graph") is not None:
        graph_path = (base / doc["graph"]).resolve() \
            if not Path(doc["graph"]).is_absolute() else Path(doc["graph"])
        _require(graph_path.exists(), f"graph file {graph_path} does not exist")

    try:
        bundles = BundleSpec(str(doc["target"]), doc["bundle_m"], doc["bundle_n"])
    except BundleInfoError as exc:
        raise ConfigError(f"invalid bundles: {exc}", module="cli",
                          operation="load_run_config") from exc

    header = load_csv(data_path, missing_token=missing_token).variable_names
    for name in sorted({bundles.target, *bundles.bundled}):
        _require(name in header,
                 f"config references variable {name!r} not present in the data "
                 f"header {list(header)}")
    if graph_path is not None:
        g_vars = set(load_graph(graph_path).variables)
        _require({bundles.target, *bundles.bundled} <= g_vars,
                 "graph file does not define all configured variables")

    sweep_doc = doc.get("sweep", {})
    _require(isinstance(sweep_doc, dict), "sweep section must be an object")
    _require("tau_values" in sweep_doc, "sweep.tau_values is required")
    estimator = EstimatorConfig(
        k=int(sweep_doc.get("k_values", [5])[0]),
        noise_amplitude=float(sweep_doc.get("noise_amplitude", 1e-10)),
        seed=seed)
    try:
        sweep_cfg = SweepConfig(
            tau_values=tuple(sweep_doc["tau_values"]),
            orders=tuple(Order(int(o)) for o in sweep_doc.get("orders", [0, 1])),
            k_values=tuple(sweep_doc.get("k_values", [5])),
            use_reduction=bool(sweep_doc.get("use_miwtr", False)),
            estimator=estimator,
            direct_total_pid=bool(sweep_doc.get("direct_total_pid", False)))
    except (BundleInfoError, ValueError) as exc:
        raise ConfigError(f"invalid sweep section: {exc}", module="cli",
                          operation="load_run_config") from exc

    discovery_cfg = None
    if doc.get("discovery") is not None:
        disc = doc["discovery"]
        _require(isinstance(disc, dict), "discovery section must be an object")
        try:
            discovery_cfg = DiscoveryConfig(
                max_lag=int(disc["max_lag"]),
                alpha=float(disc.get("alpha", 0.05)),
                n_perm=int(disc.get("n_perm", 99)),
                max_condition_size=int(disc.get("max_condition_size", 3)),
                estimator=EstimatorConfig(
                    k=int(disc.get("k", 5)),
                    noise_amplitude=float(sweep_doc.get("noise_amplitude", 1e-10)),
                    seed=seed))
        except (BundleInfoError, KeyError, ValueError) as exc:
            raise ConfigError(f"invalid discovery section: {exc}", module="cli",
                              operation="load_run_config") from exc
    _require(graph_path is not None or discovery_cfg is not None,
             "either a graph file or a discovery section is required",
             hint="add \"graph\": \"graph.json\" or a \"discovery\" object")

    output_dir = (base / doc["output_dir"]).resolve() \
        if not Path(doc["output_dir"]).is_absolute() else Path(doc["output_dir"])
    return RunConfig(
        data_path=data_path, missing_token=missing_token, graph_path=graph_path,
        bundles=bundles, output_dir=output_dir, seed=seed, sweep=sweep_cfg,
        discovery=discovery_cfg,
        config_sha256=hashlib.sha256(raw_bytes).hexdigest())


def _load_data(cfg: RunConfig) -> TimeSeriesSet:
    return load_csv(cfg.data_path, missing_token=cfg.missing_token)


def _resolve_graph(cfg: RunConfig, data: TimeSeriesSet,
                   out: Path) -> tuple[StationaryGraph, bool]:
    """Return (graph, discovery_skipped); writes graph + report artifacts."""
    if cfg.graph_path is not None:
        graph = load_graph(cfg.graph_path)
        save_graph(graph, out / "graph.json")
        return graph, True
    result = discover_graph(data, cfg.discovery)
    save_graph(result.graph, out / "graph.json")
    (out / "discovery_report.txt").write_text(format_report(result),
                                              encoding="utf-8")
    return result.graph, False


def _reduction_report(cache: dict) -> str:
    if not cache:
        return "no reduction performed (disabled or no distant nodes)\n"
    lines = ["distant-set reduction report", "============================"]
    for (tau, k) in sorted(cache):
        red = cache[(tau, k)]
        lines.append(f"tau={tau} k={k}: kept "
                     f"{sorted(str(n) for n in red.kept)}")
        for dec in red.decisions:
            verdict = "removed" if dec.removed else "kept"
            via = "->".join(str(n) for n in dec.path) if dec.path else "-"
            bn = "-" if dec.bottleneck is None else f"{dec.bottleneck:.6f}"
            lines.append(f"  {dec.src}->{dec.dst} w={dec.weight:.6f} "
                         f"bottleneck={bn} via {via}: {verdict}")
    return "\n".join(lines) + "\n"


def _manifest(cfg: RunConfig, discovery_skipped: bool, artifacts: list[str]) -> str:
    doc = {
        "config_sha256": cfg.config_sha256,
        "seed": cfg.seed,
        "versions": {"bundleinfo": __version__},
        "discovery_skipped": discovery_skipped,
        "artifacts": sorted(artifacts),
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _pid_as_dict(result: PIDResult) -> dict:
    return {"redundant": result.redundant, "synergistic": result.synergistic,
            "unique_m": result.unique_m, "unique_n": result.unique_n,
            "total": result.total, "flags": list(result.flags)}


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _cmd_sweep(args) -> int:
    cfg = load_run_config(args.config)
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    data = _load_data(cfg)
    graph, skipped = _resolve_graph(cfg, data, out)

    cache: dict = {}
    cells = sweep(data, graph, cfg.bundles, cfg.sweep, reduction_cache=cache)
    write_sweep_csv(cells, out / "sweep.csv")
    (out / "reduction_report.txt").write_text(_reduction_report(cache),
                                              encoding="utf-8")
    artifacts = ["graph.json", "reduction_report.txt", "sweep.csv",
                 "manifest.json"]
    if not skipped:
        artifacts.append("discovery_report.txt")
    (out / "manifest.json").write_text(_manifest(cfg, skipped, artifacts),
                                       encoding="utf-8")
    print(f"sweep complete: {sum(c.record is not None for c in cells)}/"
          f"{len(cells)} cells in {out}")
    return 0


def _cmd_discover(args) -> int:
    cfg = load_run_config(args.config)
    if cfg.discovery is None:
        raise ConfigError("config has no discovery section", module="cli",
                          operation="discover")
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    result = discover_graph(_load_data(cfg), cfg.discovery)
    save_graph(result.graph, out / "graph.json")
    (out / "discovery_report.txt").write_text(format_report(result),
                                              encoding="utf-8")
    print(f"discovered {len(result.graph.edges)} edges "
          f"({'converged' if result.converged else 'sweep cap hit'})")
    return 0


def _cmd_reduce(args) -> int:
    cfg = load_run_config(args.config)
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    data = _load_data(cfg)
    graph, _ = _resolve_graph(cfg, data, out)
    est = cfg.sweep.estimator if args.k is None else \
        EstimatorConfig(k=args.k, noise_amplitude=cfg.sweep.estimator.noise_amplitude,
                        seed=cfg.seed)
    reduction = prune_distant_sources(graph, cfg.bundles, args.tau, data, est)
    report = _reduction_report({(args.tau, est.k): reduction})
    (out / "reduction_report.txt").write_text(report, encoding="utf-8")
    print(f"kept {len(reduction.kept)} distant nodes; "
          f"removed {len(reduction.removed_edges)} edges")
    return 0


def _cmd_analyze(args) -> int:
    cfg = load_run_config(args.config)
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    data = _load_data(cfg)
    graph, _ = _resolve_graph(cfg, data, out)
    from dataclasses import replace as dc_replace
    est = dc_replace(cfg.sweep.estimator, k=args.k)
    record = analyze_at_lag(data, graph, cfg.bundles, args.tau,
                            Order(args.order), est,
                            use_reduction=cfg.sweep.use_reduction)
    doc = {
        "tau": record.tau, "order": int(record.order), "k": record.k,
        "sample_count": record.sample_count,
        "v_size": record.immediate_size, "w_size": record.distant_size,
        "f_size": record.condition_size,
        "T": record.total, "J": record.immediate, "D": record.distant,
        "chain_residual": record.chain_residual,
        "pid_J": _pid_as_dict(record.pid_immediate),
        "pid_D": _pid_as_dict(record.pid_distant),
        "pid_T": _pid_as_dict(record.pid_total),
    }
    print(json.dumps(doc, indent=2, sort_keys=True))
    return 0


def _cmd_synth(args) -> int:
    spec_path = Path(args.spec)
    try:
        doc = json.loads(spec_path.read_text(encoding="utf-8"))
        spec = LinearVARSpec(
            variables=tuple(doc["variables"]),
            coefficients=tuple((c["src"], int(c["lag"]), c["dst"],
                                float(c["coef"])) for c in doc["coefficients"]),
            noise_sd=doc.get("noise_sd", 1.0),
            length=int(doc.get("length", 1000)),
            seed=int(doc.get("seed", 0)),
            burn_in=int(doc.get("burn_in", 500)))
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise ConfigError(f"invalid synthetic spec {spec_path}: {exc}",
                          module="cli", operation="synth") from exc
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    data, graph = gen_linear_var(spec)
    save_csv(data, out / "data.csv")
    save_graph(graph, out / "graph.json")
    print(f"wrote {out / 'data.csv'} ({data.n_steps} rows) and "
          f"{out / 'graph.json'} ({len(graph.edges)} edges)")
    return 0


def _cmd_report(args) -> int:
    records = read_sweep_csv(args.sweep_csv)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    groups: dict[tuple[str, str], list[dict]] = {}
    for rec in records:
        groups.setdefault((rec["order"], rec["k"]), []).append(rec)
    written = []
    for (order, k) in sorted(groups):
        name = f"plot_order{order}_k{k}.csv"
        lines = ["tau,order,k,component,value"]
        for rec in groups[(order, k)]:
            if rec["error"]:
                continue  # gap cells carry no plottable values
            for comp in _PLOT_COMPONENTS:
                lines.append(f"{rec['tau']},{order},{k},{comp},{rec[comp]}")
        (out / name).write_text("\n".join(lines) + "\n", encoding="utf-8")
        written.append(name)
    if not groups:
        (out / "plot_empty.csv").write_text("tau,order,k,component,value\n",
                                            encoding="utf-8")
        written.append("plot_empty.csv")
    print(f"wrote {len(written)} plot file(s) in {out}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bundleinfo",
        description="Bundled-history information flow analysis for "
                    "multivariate time series.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="full pipeline: graph, reduction, "
                                     "(tau, order, k) grid, manifest")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("discover", help="learn the lag graph only")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_discover)

    p = sub.add_parser("reduce", help="prune the distant node set at one tau")
    p.add_argument("--config", required=True)
    p.add_argument("--tau", type=int, required=True)
    p.add_argument("--k", type=int, default=None)
    p.set_defaults(func=_cmd_reduce)

    p = sub.add_parser("analyze", help="single (tau, order, k) cell to stdout")
    p.add_argument("--config", required=True)
    p.add_argument("--tau", type=int, required=True)
    p.add_argument("--order", type=int, choices=[0, 1], required=True)
    p.add_argument("--k", type=int, default=5)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("synth", help="generate VAR data + true graph")
    p.add_argument("--spec", required=True)
    p.add_argument("--output-dir", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("report", help="reshape a sweep CSV into long-format "
                                      "plot data")
    p.add_argument("--sweep-csv", required=True)
    p.add_argument("--output-dir", required=True)
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BundleInfoError as exc:
        record = {
            "error": type(exc).__name__,
            "module": exc.module,
            "operation": exc.operation,
            "message": str(exc),
            "hint": exc.hint,
        }
        print(json.dumps(record, sort_keys=True), file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(json.dumps({"error": "OSError", "message": str(exc)},
                         sort_keys=True), file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
