"""Batch driver: replicated runs, deterministic merging, verification suites
and artifact export."""

from __future__ import annotations

import json
import math
import os
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from fractions import Fraction
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import engine, oracles, stats
from .engine import ROOT, SimConfig
from .stats import RunCollectors, collect_run, log_grid


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Experiment configuration

@dataclass
class ExperimentSpec:
    cells: list[tuple[int, int]]  # (step_parameter, target_nodes)
    replicas: int = 10
    base_seed: int = 0
    checks: list[str] = field(default_factory=list)
    output_dir: str = "out"
    snapshot_points: int = 20
    jobs: int = 1

    def __post_init__(self):
        if not self.cells:
            raise UsageError("experiment needs at least one (s, nodes) cell")
        if self.replicas < 1:
            raise UsageError("replicas must be >= 1")
        for s, n in self.cells:
            SimConfig(s, n, seed=0)  # validates the cell parameters
        unknown = [c for c in self.checks if c not in SUITES]
        if unknown:
            raise UsageError(
                f"unknown checks {unknown}; available: {sorted(SUITES)}")

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentSpec":
        with open(path) as f:
            raw = json.load(f)
        raw["cells"] = [tuple(c) for c in raw.get("cells", [])]
        return cls(**raw)


def replica_seed(base_seed: int, cell_index: int, replica_index: int) -> int:
    """Deterministic seed mixing: SeedSequence(base, spawn_key=(cell, replica)).

    Adding cells or replicas never perturbs the streams of existing ones.
    """
    ss = np.random.SeedSequence(entropy=base_seed,
                                spawn_key=(cell_index, replica_index))
    return int(ss.generate_state(1, np.uint64)[0])


# ---------------------------------------------------------------------------
# Replicated runs

@dataclass
class ReplicaSummary:
    """Picklable per-replica aggregate, merged across replicas by the driver."""

    seed: int
    status: str = "ok"
    clock: int = 0
    vertex_count: int = 0
    leaf_count: int = 0
    max_depth: int = 0
    root_visits: int = 0
    root_entries: int = 0
    root_last_visit: int = 0
    parity_changes: int = 0
    steps_per_second: float = 0.0
    degree_counts: dict[int, int] = field(default_factory=dict)
    leaf_series: list[tuple[int, int]] = field(default_factory=list)
    checkpoints: list[dict] = field(default_factory=list)
    renewal_gaps: list[int] = field(default_factory=list)
    bounce_anchors: dict[int, int] = field(default_factory=dict)
    bounce_tails: dict[tuple[int, int], int] = field(default_factory=dict)
    bounce_runs: list[tuple[int, int]] = field(default_factory=list)


def run_replica(s: int, nodes: int, seed: int,
                snapshot_grid: Optional[Sequence[int]] = None,
                checkpoint_grid: Optional[Sequence[int]] = None,
                keep_bounce_runs: bool = False,
                keep_bounce_stats: bool = True) -> ReplicaSummary:
    config = SimConfig(s, nodes, seed)
    t0 = time.perf_counter()
    try:
        res = collect_run(config, snapshot_grid, checkpoint_grid)
    except engine.ResourceExhausted as exc:
        return ReplicaSummary(seed=seed,
                              status=f"failed({exc})",
                              clock=exc.clock,
                              vertex_count=exc.vertices_built)
    elapsed = max(time.perf_counter() - t0, 1e-9)
    c = res.collectors
    return ReplicaSummary(
        seed=seed,
        clock=res.walker.clock,
        vertex_count=res.tree.vertex_count,
        leaf_count=c.leaf_count,
        max_depth=c.max_depth,
        root_visits=c.visits[ROOT],
        root_entries=c.root_entries,
        root_last_visit=c.last_visit[ROOT],
        parity_changes=res.walker.parity_change_count,
        steps_per_second=config.total_steps / elapsed,
        degree_counts=res.tree.degree_counts(),
        leaf_series=c.leaf_series,
        checkpoints=[{"n": cp.vertex_count, "clock": cp.clock,
                      "visits": cp.visits,
                      "parity_changes": cp.parity_change_count}
                     for cp in c.checkpoints],
        renewal_gaps=c.renewal_gaps(),
        # the (degree, run) tail counter can hold ~10^6 keys at large N;
        # suites that never read it drop it to keep replica batches small
        bounce_anchors=dict(c.bounce_anchors) if keep_bounce_stats else {},
        bounce_tails=dict(c.bounce_tails) if keep_bounce_stats else {},
        bounce_runs=c.bounce_runs if keep_bounce_runs else [],
    )


def _worker(args) -> ReplicaSummary:
    return run_replica(*args)


def run_cell(s: int, nodes: int, replicas: int, base_seed: int,
             cell_index: int = 0, snapshot_points: int = 20,
             jobs: int = 1, keep_bounce_runs: bool = False,
             keep_bounce_stats: bool = True) -> list[ReplicaSummary]:
    """Run one (s, nodes) cell; replica order in the result is fixed, so any
    merge downstream is independent of execution order."""
    grid = log_grid(min(100, nodes), nodes, snapshot_points)
    cp_grid = log_grid(min(10, nodes), nodes, 10)
    tasks = [(s, nodes, replica_seed(base_seed, cell_index, r), grid, cp_grid,
              keep_bounce_runs, keep_bounce_stats)
             for r in range(replicas)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_worker, tasks))
    return [run_replica(*t) for t in tasks]


def merge_counters(dicts: Sequence[dict]) -> Counter:
    out: Counter = Counter()
    for d in dicts:
        out.update(d)
    return out


def mean_leaf_series(summaries: Sequence[ReplicaSummary]) -> list[tuple[int, float]]:
    """Replica-mean leaf count at each shared grid point."""
    by_n: dict[int, list[int]] = {}
    for s in summaries:
        for n, leaves in s.leaf_series:
            by_n.setdefault(n, []).append(leaves)
    return [(n, sum(v) / len(v)) for n, v in sorted(by_n.items())
            if len(v) == len(summaries)]


# ---------------------------------------------------------------------------
# Verification suites

@dataclass
class SuiteResult:
    name: str
    passed: bool
    runtime_s: float
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name} ({self.runtime_s:.1f}s)"


@dataclass
class VerificationReport:
    suites: list[SuiteResult]

    @property
    def passed(self) -> bool:
        return all(s.passed for s in self.suites)

    def lines(self) -> list[str]:
        out = [s.line() for s in self.suites]
        out.append("[PASS] all suites" if self.passed else "[FAIL] some suites")
        return out


def _binom_sigma(p: float, n: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 1e-12) / n)


def _dkw_margin(n: int, alpha: float = 0.01) -> float:
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * n))


def suite_star_tail(samples: int = 100_000, seed: int = 2024, **_) -> SuiteResult:
    """Exact enumeration equality for small parameters plus Monte Carlo
    agreement of the star-process degree tail with its closed form."""
    t0 = time.perf_counter()
    failures = []
    for s in (2, 4):
        for variant in (oracles.NON_ROOT, oracles.ROOT_VARIANT):
            for k in range(1, 5):
                closed = oracles.star_tail_exact(s, k, variant)
                enum = oracles.star_tail_enumerated(s, k, variant)
                if closed != enum:
                    failures.append(f"enumeration mismatch s={s} k={k} "
                                    f"{variant}: {closed} != {enum}")
    rng = engine.PrngStream(seed)
    spec = oracles.StarProcessSpec(2, oracles.NON_ROOT, max_time=200_001)
    degrees = [oracles.simulate_star(spec, rng).center_degree
               for _ in range(samples)]
    worst = 0.0
    for k in range(1, 11):
        p = oracles.star_tail(2, k)
        emp = sum(1 for d in degrees if d >= k + 1) / samples
        dev = abs(emp - p) / _binom_sigma(p, samples)
        worst = max(worst, dev)
        if dev > 3.0:
            failures.append(f"MC tail s=2 k={k}: emp={emp:.5f} vs {p:.5f} "
                            f"({dev:.1f} sigma)")
    # root variant: probability the first step avoids the parent edge is 1/3
    root_spec = oracles.StarProcessSpec(2, oracles.ROOT_VARIANT, max_time=200_001)
    rng2 = engine.PrngStream(seed + 1)
    n_first = 20_000
    leaf_first = sum(1 for _ in range(n_first)
                     if oracles.simulate_star(root_spec, rng2).stop_time != 1)
    p_leaf = leaf_first / n_first
    if abs(p_leaf - 1.0 / 3.0) > 3.0 * _binom_sigma(1.0 / 3.0, n_first):
        failures.append(f"root-variant first leaf-step frequency {p_leaf:.4f} "
                        "far from 1/3")
    return SuiteResult("star-tail", not failures, time.perf_counter() - t0,
                       {"failures": failures, "worst_sigma": worst,
                        "root_first_leaf_freq": p_leaf, "samples": samples})


def suite_t_distribution(samples: int = 100_000, seed: int = 2025,
                         s: int = 2, **_) -> SuiteResult:
    """Rational telescoping of the parent-hitting-time pmf, plus Monte Carlo
    total-variation agreement of sampled hitting times."""
    t0 = time.perf_counter()
    failures = []
    for s_chk in (2, 4, 6, 8):
        for big_k in (0, 3, 7, 23):
            total = sum(oracles.t_pmf_exact(s_chk, k) for k in range(big_k + 1))
            if total + oracles.t_ccdf_exact(s_chk, big_k + 1) != 1:
                failures.append(f"telescoping broken at s={s_chk} K={big_k}")
    cap_k = 20_000
    spec = oracles.StarProcessSpec(s, oracles.NON_ROOT, max_time=2 * cap_k + 2)
    rng = engine.PrngStream(seed)
    counts: Counter = Counter()
    censored = 0
    for _ in range(samples):
        res = oracles.simulate_star(spec, rng)
        if res.stop_time is None:
            censored += 1
        else:
            counts[(res.stop_time - 1) // 2] += 1
    tv = 0.5 * abs(censored / samples - oracles.t_ccdf(s, cap_k + 1))
    for k in range(cap_k + 1):
        tv += 0.5 * abs(counts.get(k, 0) / samples - oracles.t_pmf(s, k))
    if tv > 0.02:
        failures.append(f"TV distance {tv:.4f} > 0.02 at s={s}")
    return SuiteResult("t-distribution", not failures,
                       time.perf_counter() - t0,
                       {"failures": failures, "tv": tv, "censored": censored,
                        "samples": samples, "s": s})


def suite_t_expectation(**_) -> SuiteResult:
    """Convergence of the mean partial sums to 1 + 2*zeta(s/2), and the s=2
    divergence."""
    t0 = time.perf_counter()
    failures = []
    details = {}
    for s in (4, 6, 8):
        target = oracles.t_expectation(s)
        blocks = 1000
        prev = oracles.t_mean_partial_sum(s, blocks)
        # adaptive truncation: grow until successive partial sums settle
        while True:
            blocks *= 4
            cur = oracles.t_mean_partial_sum(s, blocks)
            if abs(cur - prev) < 1e-8 or blocks > 10**7:
                break
            prev = cur
        details[f"s{s}"] = {"partial": cur, "target": target, "blocks": blocks}
        if abs(cur - target) > 1e-6:
            failures.append(f"s={s}: partial {cur!r} vs {target!r}")
    # s=2: partial sums exceed any bound; the closed-form resummation makes
    # the astronomically long truncation reachable
    div = oracles.t_mean_partial_sum(2, 2 * 10**11)
    details["s2_partial"] = div
    if not div > 50.0:
        failures.append(f"s=2 partial sum {div} not > 50")
    if oracles.t_expectation(2) != math.inf:
        failures.append("t_expectation(2) should be +inf")
    return SuiteResult("t-expectation", not failures,
                       time.perf_counter() - t0,
                       {"failures": failures, **details})


def suite_leaf_fraction(s: int = 4, nodes: int = 100_000, replicas: int = 20,
                        seed: int = 101, jobs: int = 1, **_) -> SuiteResult:
    """Replica-mean leaf fraction against the renewal lower bound, plus the
    stochastic domination of renewal gaps by the hitting-time tail."""
    t0 = time.perf_counter()
    failures = []
    summaries = run_cell(s, nodes, replicas, seed, jobs=jobs,
                         keep_bounce_stats=False)
    fractions = [r.leaf_count / r.vertex_count for r in summaries]
    mean = sum(fractions) / len(fractions)
    bound = oracles.leaf_fraction_lower_bound(s)
    if mean < bound - 0.02:
        failures.append(f"mean leaf fraction {mean:.4f} < {bound - 0.02:.4f}")
    low = min(fractions)
    if low < 2.0 / 3.0:
        failures.append(f"replica leaf fraction {low:.4f} < 2/3")
    gaps = [g for r in summaries for g in r.renewal_gaps]
    gap_checks = []
    if gaps:
        n = len(gaps)
        for k in range(0, 30):
            emp = sum(1 for g in gaps if g >= 2 * k + 1) / n
            ref = oracles.t_ccdf(s, k)
            ok = emp >= ref - 3.0 * _binom_sigma(ref, n)
            gap_checks.append((k, emp, ref, ok))
            if not ok:
                failures.append(f"renewal gap CCDF below hitting-time tail "
                                f"at k={k}: {emp:.4f} < {ref:.4f}")
    return SuiteResult("leaf-fraction", not failures,
                       time.perf_counter() - t0,
                       {"failures": failures, "mean": mean, "min": low,
                        "bound": bound, "replicas": replicas, "nodes": nodes,
                        "n_gaps": len(gaps)})


def suite_leaf_fraction_s2(nodes: int = 1_000_000, replicas: int = 20,
                           seed: int = 103, jobs: int = 1, **_) -> SuiteResult:
    """s=2: replica-mean leaf fraction increases along the snapshot grid and
    clears 0.90 at the final size (pilot-calibrated threshold).

    The monotonicity clause is strict; between late grid points the true
    mean increments are comparable to the replica-mean noise at any replica
    count that fits the runtime budget, so occasional tiny dips fail it."""
    t0 = time.perf_counter()
    failures = []
    summaries = run_cell(2, nodes, replicas, seed, jobs=jobs,
                         keep_bounce_stats=False)
    series = mean_leaf_series(summaries)
    fracs = [(n, leaves / n) for n, leaves in series]
    for (n1, f1), (n2, f2) in zip(fracs, fracs[1:]):
        if not f2 > f1:
            failures.append(f"mean leaf fraction not increasing: "
                            f"{f1:.4f}@{n1} -> {f2:.4f}@{n2}")
    final = fracs[-1][1] if fracs else 0.0
    if not final > 0.90:
        failures.append(f"final mean leaf fraction {final:.4f} <= 0.90")
    return SuiteResult("leaf-fraction-s2", not failures,
                       time.perf_counter() - t0,
                       {"failures": failures, "series": fracs,
                        "final": final, "replicas": replicas, "nodes": nodes})


def suite_geometric_visits(nodes: int = 10_000, replicas: int = 1000,
                           seed: int = 105, jobs: int = 1, **_) -> SuiteResult:
    """s=1 transience consequences: root-visit counts against the geometric
    tail (2/3)^(k-1), and early last-visit times.

    The visit-count clause counts every step spent at the root, including
    consecutive self-loop traversals, per the visit ledger's definition.
    """
    t0 = time.perf_counter()
    failures = []
    summaries = run_cell(1, nodes, replicas, seed, jobs=jobs,
                         keep_bounce_stats=False)
    visits = [r.root_visits for r in summaries]
    entries = [r.root_entries for r in summaries]
    n = len(visits)
    top = max(visits)
    empirical = [(k, sum(1 for v in visits if v >= k) / n)
                 for k in range(1, top + 2)]
    rate = oracles.GEOMETRIC_RETURN_RATE
    report = stats.dominance_check(empirical, lambda k: rate ** (k - 1),
                                   "<=", n_samples=n)
    if not report.passed:
        failures.append(f"root-visit CCDF above (2/3)^(k-1)+margin; worst "
                        f"violation {report.worst_violation:.4f}")
    entry_emp = [(k, sum(1 for v in entries if v >= k) / n)
                 for k in range(1, max(entries) + 2)]
    entry_report = stats.dominance_check(entry_emp, lambda k: rate ** (k - 1),
                                         "<=", n_samples=n)
    last_frac = [r.root_last_visit / r.clock for r in summaries]
    mean_last = sum(last_frac) / n
    if not mean_last < 0.1:
        failures.append(f"mean last-visit fraction {mean_last:.4f} >= 0.1")
    return SuiteResult("geometric-visits", not failures,
                       time.perf_counter() - t0,
                       {"failures": failures, "mean_last_visit": mean_last,
                        "max_visits": top, "margin": report.margin,
                        "worst_violation": report.worst_violation,
                        "entries_dominated": entry_report.passed,
                        "entries_worst_violation": entry_report.worst_violation,
                        "replicas": n, "nodes": nodes})


def suite_recurrence(nodes: int = 100_000, replicas: int = 20,
                     seed: int = 107, jobs: int = 1, **_) -> SuiteResult:
    """s in {2, 4}: root visits and parity changes strictly increase across
    logarithmic checkpoints in every replica."""
    t0 = time.perf_counter()
    failures = []
    details = {}
    for idx, s in enumerate((2, 4)):
        summaries = run_cell(s, nodes, replicas, seed, cell_index=idx,
                             jobs=jobs, keep_bounce_stats=False)
        for r in summaries:
            cps = r.checkpoints
            j_root = [cp["visits"][ROOT] for cp in cps]
            parity = [cp["parity_changes"] for cp in cps]
            if any(b <= a for a, b in zip(j_root, j_root[1:])):
                failures.append(f"s={s} seed={r.seed}: J_root not strictly "
                                f"increasing: {j_root}")
            if any(b <= a for a, b in zip(parity, parity[1:])):
                failures.append(f"s={s} seed={r.seed}: parity changes not "
                                f"strictly increasing: {parity}")
        details[f"s{s}_root_visits_last"] = [r.root_visits for r in summaries]
    return SuiteResult("recurrence", not failures, time.perf_counter() - t0,
                       {"failures": failures, **details,
                        "replicas": replicas, "nodes": nodes})


def suite_bounce(nodes: int = 100_000, replicas: int = 20, seed: int = 109,
                 max_k: int = 30, jobs: int = 1, **_) -> SuiteResult:
    """Pooled consecutive two-step-return frequencies against the exact
    product bound, degree by degree."""
    t0 = time.perf_counter()
    failures = []
    summaries = run_cell(2, nodes, replicas, seed, jobs=jobs)
    anchors = merge_counters([r.bounce_anchors for r in summaries])
    tails = merge_counters([r.bounce_tails for r in summaries])
    by_degree: dict[int, Counter] = {}
    for (deg, run), c in tails.items():
        by_degree.setdefault(deg, Counter())[run] += c
    worst = 0.0
    checked = 0
    for d, n_d in anchors.items():
        margin = _dkw_margin(n_d)
        runs = by_degree.get(d, Counter())
        # suffix counts: hits_at_least[k] = number of anchors with >= k returns
        top = min(max(runs, default=0), max_k)
        tail_count = sum(c for run, c in runs.items() if run > top)
        bound = oracles.bounce_bound_exact(d, 1)
        step = Fraction(1)
        for k in range(1, max_k + 1):
            if k > 1:
                step = Fraction(2 * (d + k - 1) - 1, 2 * (d + k - 1))
                bound *= step
            hits = tail_count + sum(c for run, c in runs.items()
                                    if k <= run <= top)
            freq = hits / n_d
            limit = float(bound) + margin
            worst = max(worst, freq - limit)
            checked += 1
            if freq > limit:
                failures.append(f"d={d} k={k}: freq {freq:.4f} > bound "
                                f"{limit:.4f} (n={n_d})")
    return SuiteResult("bounce", not failures, time.perf_counter() - t0,
                       {"failures": failures[:10], "checked": checked,
                        "worst_gap": worst, "degrees": len(anchors),
                        "replicas": replicas, "nodes": nodes})


def suite_invariants(seed: int = 111, **_) -> SuiteResult:
    """Exact per-step structural laws on a batch of small runs, plus the
    deterministic-replay contract."""
    t0 = time.perf_counter()
    failures = []
    cases = [(1, 200), (2, 200), (3, 120), (4, 150), (5, 80), (6, 120)]
    for i, (s, n) in enumerate(cases):
        config = SimConfig(s, n, seed=seed + i)
        errs = check_invariants(config)
        failures.extend(f"s={s} n={n}: {e}" for e in errs)
        lines_a = engine.edge_list_lines(*_tree_of(config))
        lines_b = engine.edge_list_lines(*_tree_of(config))
        if lines_a != lines_b:
            failures.append(f"s={s} n={n}: replay not byte-identical")
    return SuiteResult("invariants", not failures, time.perf_counter() - t0,
                       {"failures": failures, "cases": cases})


def _tree_of(config: SimConfig):
    tree, _ = engine.run(config)
    return tree, config


def check_invariants(config: SimConfig) -> list[str]:
    """Run ``config`` with a checking observer; returns violation messages."""
    errors: list[str] = []
    state = {"flips": [], "loops": [], "leaf_prev": 0,
             "attach_parities": [], "prev_parity": 0}
    coll = RunCollectors(config)

    def observe(event, tree, walker):
        coll.record(event, tree, walker)
        # parity bit must match its from-scratch definition
        expected = (tree.depth[walker.position] + walker.clock) % 2
        if walker.parity != expected:
            errors.append(f"t={event.time}: tracked parity {walker.parity} != "
                          f"recomputed {expected}")
        if walker.parity != state["prev_parity"]:
            state["flips"].append(event.time)
        state["prev_parity"] = walker.parity
        if event.via_self_loop:
            state["loops"].append(event.time)
            if not (event.src == ROOT and event.dst == ROOT):
                errors.append(f"t={event.time}: self-loop not at root")
        if event.attached_vertex is not None:
            v = event.attached_vertex
            if tree.parent[v] != event.dst:
                errors.append(f"t={event.time}: attached parent mismatch")
            if tree.depth[v] != tree.depth[event.dst] + 1:
                errors.append(f"t={event.time}: attached depth mismatch")
            state["attach_parities"].append(
                (len(state["loops"]), tree.depth[v] % 2))
        if coll.leaf_count < state["leaf_prev"]:
            errors.append(f"t={event.time}: leaf count decreased")
        state["leaf_prev"] = coll.leaf_count
        if config.step_parameter % 2 == 0:
            if walker.parity != walker.parity_change_count % 2:
                errors.append(f"t={event.time}: parity law "
                              "(depth+t != parity changes mod 2)")

    tree, walker = engine.run(config, on_event=observe)
    coll.finish()

    if state["flips"] != state["loops"]:
        errors.append("parity flips do not coincide with self-loop traversals")
    if config.step_parameter % 2 == 0:
        # between two consecutive parity changes all attached depths share
        # one parity
        epochs: dict[int, set[int]] = {}
        for n_loops, par in state["attach_parities"]:
            epochs.setdefault(n_loops, set()).add(par)
        mixed = [e for e, ps in epochs.items() if len(ps) > 1]
        if mixed:
            errors.append(f"attachment parity mixed within epochs {mixed}")
    total_degree = sum(tree.degree_of(v) for v in range(tree.vertex_count))
    if total_degree != 2 * (tree.vertex_count - 1) + 2:
        errors.append("degree sum identity violated")
    if sum(coll.visits) != walker.clock:
        errors.append("visit ledger does not sum to the clock")
    n = tree.vertex_count
    non_leaf_non_root = sum(
        1 for v in range(1, n) if tree.degree_of(v) >= 2)
    if non_leaf_non_root + 1 != n - coll.leaf_count:
        errors.append("non-leaf count identity violated")
    for v in range(1, n):
        if not 0 <= tree.parent[v] < v:
            errors.append(f"parent pointer of {v} not older than the vertex")
        if tree.depth[v] != tree.depth[tree.parent[v]] + 1:
            errors.append(f"depth of {v} inconsistent with parent")
        if tree.birth_time[v] != v * config.step_parameter:
            errors.append(f"birth time of {v} wrong")
    if n >= 2 and tree.degree_of(ROOT) < 3:
        errors.append("root degree below 3 after first attachment")
    return errors


def suite_depth_dichotomy(nodes: int = 10_000, replicas: int = 10,
                          seed: int = 113, jobs: int = 1, **_) -> SuiteResult:
    """Qualitative transient-vs-recurrent shape split: s=1 trees run much
    deeper than s=2 trees at equal size."""
    t0 = time.perf_counter()
    failures = []
    deep = run_cell(1, nodes, replicas, seed, cell_index=0, jobs=jobs,
                    keep_bounce_stats=False)
    flat = run_cell(2, nodes, replicas, seed, cell_index=1, jobs=jobs,
                    keep_bounce_stats=False)
    mean_deep = sum(r.max_depth for r in deep) / len(deep)
    mean_flat = sum(r.max_depth for r in flat) / len(flat)
    ratio = mean_deep / mean_flat
    if not ratio > 5.0:
        failures.append(f"depth ratio {ratio:.2f} <= 5")
    return SuiteResult("depth-dichotomy", not failures,
                       time.perf_counter() - t0,
                       {"failures": failures, "mean_depth_s1": mean_deep,
                        "mean_depth_s2": mean_flat, "ratio": ratio})


SUITES: dict[str, Callable[..., SuiteResult]] = {
    "star-tail": suite_star_tail,
    "t-distribution": suite_t_distribution,
    "t-expectation": suite_t_expectation,
    "leaf-fraction": suite_leaf_fraction,
    "leaf-fraction-s2": suite_leaf_fraction_s2,
    "geometric-visits": suite_geometric_visits,
    "recurrence": suite_recurrence,
    "bounce": suite_bounce,
    "invariants": suite_invariants,
    "depth-dichotomy": suite_depth_dichotomy,
}


def verify(suite_name: str, **options) -> VerificationReport:
    if suite_name not in SUITES:
        raise UsageError(f"unknown suite {suite_name!r}; "
                         f"available: {sorted(SUITES)}")
    return VerificationReport([SUITES[suite_name](**options)])


# ---------------------------------------------------------------------------
# Experiment driver

def output_root(spec_dir: str) -> Path:
    return Path(os.environ.get("NRRW_OUT", spec_dir))


def run_experiment(spec: ExperimentSpec) -> VerificationReport:
    """Execute every cell of the experiment, write artifacts, then run the
    requested verification suites."""
    root = output_root(spec.output_dir)
    root.mkdir(parents=True, exist_ok=True)
    cell_reports = []
    for ci, (s, nodes) in enumerate(spec.cells):
        cell_dir = root / f"cell_s{s}_n{nodes}"
        cell_dir.mkdir(parents=True, exist_ok=True)
        summaries = run_cell(s, nodes, spec.replicas, spec.base_seed,
                             cell_index=ci,
                             snapshot_points=spec.snapshot_points,
                             jobs=spec.jobs, keep_bounce_runs=True)
        failed = [r for r in summaries if r.status != "ok"]
        ok = [r for r in summaries if r.status == "ok"]
        if ok:
            degrees = merge_counters([r.degree_counts for r in ok])
            _write(cell_dir / "degrees.csv", stats.degrees_csv(dict(degrees)))
            _write(cell_dir / "ccdf.csv",
                   stats.ccdf_csv(stats.empirical_ccdf(dict(degrees))))
            series = mean_leaf_series(ok)
            _write(cell_dir / "leaves.csv",
                   ["n,leaves"] + [f"{n},{v:.6f}" for n, v in series])
            runs = [rl for r in ok for rl in r.bounce_runs]
            _write(cell_dir / "bounces.csv", stats.bounces_csv(runs))
        with open(cell_dir / "replicas.jsonl", "w") as f:
            for r in summaries:
                f.write(json.dumps({
                    "seed": r.seed, "status": r.status,
                    "leaf_fraction": (r.leaf_count / r.vertex_count
                                      if r.vertex_count else None),
                    "max_depth": r.max_depth, "root_visits": r.root_visits,
                    "parity_changes": r.parity_changes,
                    "steps_per_second": round(r.steps_per_second, 1),
                }) + "\n")
        cell_reports.append({"cell": [s, nodes], "replicas": spec.replicas,
                             "failed": len(failed)})
    suite_results = [SUITES[name](jobs=spec.jobs) for name in spec.checks]
    report = VerificationReport(suite_results)
    payload = {"cells": cell_reports,
               "suites": [{"name": r.name, "passed": r.passed,
                           "runtime_s": round(r.runtime_s, 2),
                           "details": _jsonable(r.details)}
                          for r in suite_results],
               "passed": report.passed}
    _write(root / "report.json", [json.dumps(payload, indent=2)])
    _write(root / "report.txt", report.lines())
    return report


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (np.integer, np.floating)):
        return obj.item()
    return obj


def _write(path: Path, lines: Sequence[str]):
    try:
        with open(path, "w") as f:
            f.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write artifact {path}: {exc}") from exc
