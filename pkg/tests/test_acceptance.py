"""Acceptance suite: one test per numbered criterion, tolerances pinned.

Every [DERIVED] expectation is computed from an independent oracle
(closed-form Gaussian information, plug-in discrete tables, exhaustive
path enumeration); nothing is tuned to the implementation under test.
"""

from __future__ import annotations

import json
import math
import os
import time
from dataclasses import dataclass

import numpy as np
import pytest

import bundleinfo as bi
from bundleinfo.analysis import analyze_at_lag
from bundleinfo.cli import main as cli_main
from bundleinfo.pid import PIDInputs, pid_decompose
from bundleinfo.synth import LinearVARSpec, spectral_radius
from bundleinfo.tsgraph import LaggedNode, Order

from conftest import (
    correlated_gaussian,
    oracle_reduction,
    plugin_entropy,
    plugin_mi,
    random_dag_corpus,
)

MI_RHO_06 = -0.5 * math.log(1.0 - 0.36)  # 0.22314355131420976
LN2 = math.log(2.0)


def report(line: str):
    print(f"\n[acceptance] {line}")


# ---------------------------------------------------------------------------
# Criterion 1: Gaussian MI oracle
# ---------------------------------------------------------------------------

def test_c01_gaussian_mi_oracle():
    values = []
    elapsed = []
    for seed in range(20):
        x, y = correlated_gaussian(2000, 0.6, seed)
        start = time.perf_counter()
        values.append(bi.ksg_mi(x, y, bi.EstimatorConfig(k=5, seed=seed)).value)
        elapsed.append(time.perf_counter() - start)
    median = float(np.median(values))
    assert abs(median - MI_RHO_06) <= 0.03
    assert max(elapsed) < 2.0
    report(f"criterion 1 PASS: median MI {median:.4f} vs {MI_RHO_06:.4f} "
           f"(max {max(elapsed) * 1e3:.0f} ms/estimate)")


# ---------------------------------------------------------------------------
# Criterion 2: conditional-independence zero
# ---------------------------------------------------------------------------

def test_c02_conditional_independence_zero():
    values = []
    for seed in range(20):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((4000, 1))
        y = 0.7 * x + math.sqrt(1 - 0.49) * rng.standard_normal((4000, 1))
        z = 0.7 * y + math.sqrt(1 - 0.49) * rng.standard_normal((4000, 1))
        values.append(bi.fp_cmi(x, z, y, bi.EstimatorConfig(k=5, seed=seed)).value)
    median = float(np.median(values))
    assert abs(median) <= 0.03
    report(f"criterion 2 PASS: median CMI through the chain {median:+.4f}")


# ---------------------------------------------------------------------------
# Criteria 3 and 4: randomized oracle battery and the chain rule
# ---------------------------------------------------------------------------

@dataclass
class BatteryCell:
    seed: int
    errors: tuple[float, float, float]
    residual: float


def _random_battery_spec(seed: int) -> LinearVARSpec | None:
    rng = np.random.default_rng(seed)
    names = ["Z", "M1", "M2", "N1"] + (["R1"] if rng.integers(0, 2) else [])
    coeffs = [("M1", 1, "Z", float(rng.uniform(0.25, 0.45))),
              ("N1", int(rng.integers(1, 3)), "Z", float(rng.uniform(0.25, 0.45)))]
    present = {(c[0], c[1], c[2]) for c in coeffs}
    for dst in names:
        for src in names:
            for lag in (1, 2):
                if (src, lag, dst) in present:
                    continue
                prob = 0.28 if src == dst and lag == 1 else 0.12
                if rng.random() < prob:
                    coeffs.append((src, lag, dst, float(rng.uniform(-0.4, 0.4))))
    try:
        return LinearVARSpec(variables=tuple(names), coefficients=tuple(coeffs),
                             noise_sd=1.0, length=8000, seed=seed, burn_in=500)
    except bi.errors.StationarityError:
        return None


@pytest.fixture(scope="module")
def oracle_battery():
    start = time.perf_counter()
    cells = []
    seed = 3000
    while len(cells) < 10:
        spec = _random_battery_spec(seed)
        seed += 1
        if spec is None or spectral_radius(spec) > 0.92:
            continue
        bundles = bi.BundleSpec("Z", ["M1", "M2"], ["N1"])
        sets = bi.compute_node_sets(spec.true_graph(), bundles, 2, Order.ORDER1)
        if not sets.immediate and not sets.distant:
            continue
        ts, graph = bi.gen_linear_var(spec)
        record = analyze_at_lag(ts, graph, bundles, 2, Order.ORDER1,
                                bi.EstimatorConfig(k=5, seed=0))
        z = [LaggedNode("Z", 0)]
        v = sorted(sets.immediate)
        w = sorted(sets.distant)
        f = sorted(sets.condition)
        t_oracle = bi.gaussian_info_oracle(spec, z, v, f)
        j_oracle = bi.gaussian_info_oracle(spec, z, v, f + w)
        d_oracle = bi.gaussian_info_oracle(spec, z, w, f)
        cells.append(BatteryCell(
            seed - 1,
            (record.total - t_oracle, record.immediate - j_oracle,
             record.distant - d_oracle),
            record.chain_residual))
    return cells, time.perf_counter() - start


def test_c03_oracle_battery(oracle_battery):
    cells, elapsed = oracle_battery
    assert len(cells) >= 10
    worst = max(max(abs(e) for e in cell.errors) for cell in cells)
    assert worst <= 0.05, f"worst estimator-vs-oracle error {worst:.4f}"
    assert elapsed < 300.0
    report(f"criterion 3 PASS: {len(cells)} random systems, worst "
           f"|estimate - oracle| {worst:.4f} nats in {elapsed:.0f}s")


def test_c04_chain_rule_residual(oracle_battery):
    cells, _ = oracle_battery
    residuals = [cell.residual for cell in cells]
    worst = max(abs(r) for r in residuals)
    assert worst <= 0.05
    report("criterion 4 PASS: chain-rule residual per cell "
           + ", ".join(f"{r:+.3f}" for r in residuals))


# ---------------------------------------------------------------------------
# Criterion 5: PID algebra
# ---------------------------------------------------------------------------

def test_c05_pid_algebra():
    rng = np.random.default_rng(55)
    for _ in range(1000):
        inputs = PIDInputs(
            i_total=float(rng.uniform(-0.5, 5.0)),
            i_1=float(rng.uniform(-0.5, 5.0)),
            i_2=float(rng.uniform(-0.5, 5.0)),
            i_sources=float(rng.uniform(-0.5, 3.0)),
            h_1=float(rng.uniform(-1.0, 4.0)),
            h_2=float(rng.uniform(-1.0, 4.0)))
        result = pid_decompose(inputs)
        raw_sum = sum(result.components()) + result.clamp_residual
        assert abs(raw_sum - result.total) <= 1e-12
        total = max(inputs.i_total, 0.0)
        s1 = min(max(inputs.i_1, 0.0), total)
        s2 = min(max(inputs.i_2, 0.0), total)
        r_min = max(0.0, s1 + s2 - total)
        r_mmi = max(0.0, min(s1, s2))
        assert r_min - 1e-12 <= result.redundant <= r_mmi + 1e-12
        assert 0.0 <= result.source_dependency <= 1.0

    # discrete brute force: XOR table
    xor = np.zeros((2, 2, 2))
    for s1 in (0, 1):
        for s2 in (0, 1):
            xor[s1, s2, s1 ^ s2] = 0.25
    xor_result = pid_decompose(PIDInputs(
        plugin_mi(xor, (0, 1), (2,)), plugin_mi(xor, (0,), (2,)),
        plugin_mi(xor, (1,), (2,)), plugin_mi(xor, (0,), (1,)),
        plugin_entropy(xor, (0,)), plugin_entropy(xor, (1,))))
    assert abs(xor_result.redundant) <= 1e-12
    assert abs(xor_result.synergistic - LN2) <= 1e-12
    assert abs(xor_result.unique_m) <= 1e-12
    assert abs(xor_result.unique_n) <= 1e-12

    # discrete brute force: copied source
    copied = np.zeros((2, 2, 2))
    copied[0, 0, 0] = copied[1, 1, 1] = 0.5
    copy_result = pid_decompose(PIDInputs(
        plugin_mi(copied, (0, 1), (2,)), plugin_mi(copied, (0,), (2,)),
        plugin_mi(copied, (1,), (2,)), plugin_mi(copied, (0,), (1,)),
        plugin_entropy(copied, (0,)), plugin_entropy(copied, (1,))))
    assert abs(copy_result.redundant - LN2) <= 1e-12
    assert abs(copy_result.synergistic) <= 1e-12
    assert abs(copy_result.unique_m) <= 1e-12
    assert abs(copy_result.unique_n) <= 1e-12
    report("criterion 5 PASS: additivity to 1e-12 on 1000 random inputs; "
           "XOR -> pure synergy ln2, copied source -> pure redundancy ln2")


# ---------------------------------------------------------------------------
# Criterion 6: weighted transitive reduction correctness
# ---------------------------------------------------------------------------

def test_c06_wtr_exactness():
    corpus = random_dag_corpus(100)
    for edges in corpus:
        nodes = {u for u, _, _ in edges} | {v for _, v, _ in edges}
        wg = bi.WeightedUnrolledGraph(frozenset(nodes), tuple(edges))
        reduced = bi.weighted_transitive_reduction(wg)
        assert {(u, v, w) for u, v, w in reduced.edges} == \
            oracle_reduction(edges), f"oracle mismatch on {edges}"
        twice = bi.weighted_transitive_reduction(reduced)
        assert set(twice.edges) == set(reduced.edges), "not idempotent"
    report(f"criterion 6 PASS: {len(corpus)} random DAGs match the "
           "exhaustive-path oracle exactly; reduction is idempotent")


# ---------------------------------------------------------------------------
# Criterion 7: discovery recovery and calibration
# ---------------------------------------------------------------------------

def test_c07_discovery_recovery():
    alpha = 0.05
    recovered, pruned = 0, 0
    for seed in range(10):
        spec = LinearVARSpec(
            variables=("A", "B", "C"),
            coefficients=(("A", 1, "B", 0.7), ("B", 1, "C", 0.7)),
            noise_sd=1.0, length=5000, seed=seed, burn_in=300)
        ts, _ = bi.gen_linear_var(spec)
        cfg = bi.DiscoveryConfig(max_lag=2, alpha=alpha, n_perm=29,
                                 estimator=bi.EstimatorConfig(k=5, seed=seed))
        edges = {(e.src, e.lag, e.dst)
                 for e in bi.discover_graph(ts, cfg).graph.edges}
        recovered += ("A", 1, "B") in edges and ("B", 1, "C") in edges
        pruned += ("A", 2, "C") not in edges
    assert recovered >= 9, f"chain recovered in only {recovered}/10 seeds"
    assert pruned >= 9, f"spurious link pruned in only {pruned}/10 seeds"

    false_edges, n_tests = 0, 0
    for seed in range(10):
        rng = np.random.default_rng(900 + seed)
        noise = bi.TimeSeriesSet(("A", "B", "C"), rng.standard_normal((2000, 3)))
        cfg = bi.DiscoveryConfig(max_lag=2, alpha=alpha, n_perm=29,
                                 estimator=bi.EstimatorConfig(k=5, seed=seed))
        result = bi.discover_graph(noise, cfg)
        false_edges += len(result.graph.edges)
        n_tests += sum(1 for r in result.records if r.stage == 1)
    rate = false_edges / n_tests
    assert rate <= 2 * alpha, f"false-positive rate {rate:.3f}"
    report(f"criterion 7 PASS: chain {recovered}/10, pruning {pruned}/10, "
           f"false-positive rate {rate:.3f} <= {2 * alpha}")


# ---------------------------------------------------------------------------
# Criterion 8: memory convergence
# ---------------------------------------------------------------------------

def test_c08_memory_convergence():
    long_spec = LinearVARSpec(
        variables=("Z", "M1", "N1", "R1"),
        coefficients=(("M1", 1, "Z", 0.45), ("N1", 1, "Z", 0.3),
                      ("M1", 1, "M1", 0.9), ("N1", 1, "N1", 0.85),
                      ("R1", 1, "Z", 0.3)),
        noise_sd=1.0, length=4000, seed=42, burn_in=500)
    ts, graph = bi.gen_linear_var(long_spec)
    bundles = bi.BundleSpec("Z", ["M1"], ["N1"])
    cfg = bi.EstimatorConfig(k=5, seed=1)
    d_at = {tau: analyze_at_lag(ts, graph, bundles, tau, Order.ORDER1,
                                cfg).distant
            for tau in (5, 20, 30)}
    assert d_at[5] > 0.01, "no visible long-lag influence"
    assert abs(d_at[30] - d_at[20]) <= 0.03, "distant information not settled"

    short_spec = LinearVARSpec(
        variables=("Z", "M1", "N1"),
        coefficients=(("M1", 1, "Z", 0.6), ("N1", 2, "Z", 0.5)),
        noise_sd=1.0, length=3000, seed=7, burn_in=300)
    ts2, graph2 = bi.gen_linear_var(short_spec)
    bundles2 = bi.BundleSpec("Z", ["M1"], ["N1"])
    for tau in (2, 5, 12):
        record = analyze_at_lag(ts2, graph2, bundles2, tau, Order.ORDER1, cfg)
        assert record.distant_size == 0
        assert record.distant == 0.0
        assert record.total == record.immediate
    report(f"criterion 8 PASS: distant info {d_at[5]:.3f} -> {d_at[20]:.3f} "
           f"-> {d_at[30]:.3f} (plateau); exact zero once memory exhausted")


# ---------------------------------------------------------------------------
# Criterion 9: full-pipeline determinism
# ---------------------------------------------------------------------------

def test_c09_pipeline_determinism(tmp_path):
    spec_doc = {
        "variables": ["Z", "M1", "N1"],
        "coefficients": [
            {"src": "M1", "lag": 1, "dst": "Z", "coef": 0.55},
            {"src": "N1", "lag": 1, "dst": "Z", "coef": 0.5},
            {"src": "M1", "lag": 1, "dst": "M1", "coef": 0.6}],
        "noise_sd": 1.0, "length": 700, "seed": 19, "burn_in": 200}
    (tmp_path / "spec.json").write_text(json.dumps(spec_doc), encoding="utf-8")
    assert cli_main(["synth", "--spec", str(tmp_path / "spec.json"),
                     "--output-dir", str(tmp_path)]) == 0

    def run(tag: str):
        config = {
            "data": "data.csv", "graph": None, "target": "Z",
            "bundle_m": ["M1"], "bundle_n": ["N1"], "seed": 3,
            "output_dir": f"out_{tag}",
            "sweep": {"tau_values": [1, 2], "orders": [0, 1],
                      "k_values": [5], "use_miwtr": True},
            "discovery": {"max_lag": 2, "alpha": 0.05, "n_perm": 29,
                          "max_condition_size": 3}}
        path = tmp_path / f"run_{tag}.json"
        path.write_text(json.dumps(config), encoding="utf-8")
        assert cli_main(["sweep", "--config", str(path)]) == 0
        return tmp_path / f"out_{tag}"

    out_a, out_b = run("a"), run("b")
    for artifact in ("sweep.csv", "graph.json", "reduction_report.txt",
                     "discovery_report.txt"):
        assert (out_a / artifact).read_bytes() == (out_b / artifact).read_bytes(), \
            f"{artifact} differs between reruns"
    report("criterion 9 PASS: synth -> discover -> reduce -> sweep reruns "
           "are byte-identical")


# ---------------------------------------------------------------------------
# Criterion 10 (data-gated): published stream-chemistry record
# ---------------------------------------------------------------------------

def test_c10_stream_chemistry_if_supplied():
    data_path = os.environ.get("BUNDLEINFO_STREAM_DATA")
    graph_path = os.environ.get("BUNDLEINFO_STREAM_GRAPH")
    if not data_path or not graph_path:
        pytest.skip("published stream-chemistry dataset not supplied "
                    "(set BUNDLEINFO_STREAM_DATA and BUNDLEINFO_STREAM_GRAPH)")
    ts = bi.load_csv(data_path)
    graph = bi.load_graph(graph_path)
    bundles = bi.BundleSpec("pH", ["Na", "Al", "Ca"], ["Cl", "SO4"])
    before = bi.distant_sources(graph, bundles, 6)
    reduction = bi.prune_distant_sources(graph, bundles, 6, ts,
                                         bi.EstimatorConfig(k=10, seed=0))
    assert len(before) == 23
    assert len(reduction.kept) == 11
    cfg0 = bi.EstimatorConfig(k=10, seed=0)
    cfg1 = bi.EstimatorConfig(k=5, seed=0)
    tau = 120
    order0 = analyze_at_lag(ts, graph, bundles, tau, Order.ORDER0, cfg0,
                            use_reduction=True)
    order1 = analyze_at_lag(ts, graph, bundles, tau, Order.ORDER1, cfg1,
                            use_reduction=True)
    assert order0.total >= 4.0 * order1.total
    report("criterion 10 PASS: 23 -> 11 distant nodes at tau=6; "
           f"order-0 total {order0.total:.2f} >> order-1 total {order1.total:.2f}")
