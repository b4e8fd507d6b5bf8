"""Streaming collectors over a run and the statistical checks that confront
empirical data with the analytic oracles."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .engine import ROOT, GrowingTree, SimConfig, StepEvent, WalkerState, run


class ProtocolError(RuntimeError):
    """Events delivered out of clock order."""


class EmptyHistogramError(ValueError):
    pass


class FitError(ValueError):
    """Not enough usable support for a tail fit; carries the usable range."""

    def __init__(self, message: str, usable: Sequence[int] = ()):
        super().__init__(message)
        self.usable = list(usable)


@dataclass
class Checkpoint:
    """State snapshot taken when the tree reaches a given vertex count."""

    vertex_count: int
    clock: int
    visits: list[int]  # J_i for the first probe vertices
    parity_change_count: int
    root_last_visit: int


class RunCollectors:
    """Single-writer streaming statistics for one run.

    Tracks per-vertex visit counts / first-visit / first-attachment times,
    the leaf count series on a vertex-count grid, the depth profile, the
    bounce-run log (consecutive two-step returns anchored at even times) and
    an optional full trajectory.
    """

    def __init__(self, config: SimConfig,
                 snapshot_grid: Optional[Sequence[int]] = None,
                 checkpoint_grid: Optional[Sequence[int]] = None,
                 probe_vertices: int = 10):
        self.config = config
        self.visits = [0]
        self.first_visit: list[Optional[int]] = [0]
        self.last_visit = [0]
        self.first_attach: list[Optional[int]] = [None]
        self.root_entries = 0  # arrivals at the root from elsewhere
        self.leaf_count = 0
        self.leaf_series: list[tuple[int, int]] = []
        self.renewal_marks: list[int] = []  # times of additions not raising L
        self.depth_hist = [1]
        self.max_depth = 0
        self.checkpoints: list[Checkpoint] = []
        self.probe_vertices = probe_vertices
        self.trajectory: list[tuple[int, int, bool, Optional[int]]] = []
        self.attach_log: list[tuple[int, int, int]] = []  # (t, parent, parity)

        self._grid = sorted(set(snapshot_grid or []))
        self._grid_idx = 0
        self._cp_grid = sorted(set(checkpoint_grid or []))
        self._cp_idx = 0
        self._expected_t = 1

        # bounce tracking: anchors live on even times only
        self._even_prev_pos = -1
        self._even_prev_deg = 0
        self._run_degs: list[int] = []
        self.bounce_anchors: Counter[int] = Counter()  # degree -> anchor count
        self.bounce_tails: Counter[tuple[int, int]] = Counter()  # (deg, run) -> n
        self.bounce_runs: list[tuple[int, int]] = []  # maximal (start deg, len)

        self._record_snapshots_up_to(1)
        self._record_checkpoints_up_to(1, 0, 0)

    # -- internal helpers -------------------------------------------------

    def _record_snapshots_up_to(self, n: int):
        while self._grid_idx < len(self._grid) and self._grid[self._grid_idx] <= n:
            self.leaf_series.append((self._grid[self._grid_idx], self.leaf_count))
            self._grid_idx += 1

    def _record_checkpoints_up_to(self, n: int, clock: int, parity_changes: int):
        while (self._cp_idx < len(self._cp_grid)
               and self._cp_grid[self._cp_idx] <= n):
            self.checkpoints.append(Checkpoint(
                vertex_count=self._cp_grid[self._cp_idx],
                clock=clock,
                visits=list(self.visits[:self.probe_vertices]),
                parity_change_count=parity_changes,
                root_last_visit=self.last_visit[ROOT],
            ))
            self._cp_idx += 1

    def _close_bounce_run(self):
        degs = self._run_degs
        m = len(degs) - 1  # number of returns in the maximal run
        if m >= 1:
            self.bounce_runs.append((degs[0], m))
            for j in range(m):
                self.bounce_tails[(degs[j], m - j)] += 1
        self._run_degs = []

    # -- event sink -------------------------------------------------------

    def record(self, event: StepEvent, tree: GrowingTree, walker: WalkerState):
        t = event.time
        if t != self._expected_t:
            raise ProtocolError(f"expected event at t={self._expected_t}, got t={t}")
        self._expected_t = t + 1
        pos = event.dst

        self.visits[pos] += 1
        if self.first_visit[pos] is None:
            self.first_visit[pos] = t
        self.last_visit[pos] = t
        if pos == ROOT and event.src != ROOT:
            self.root_entries += 1

        attached = event.attached_vertex
        if attached is not None:
            self.visits.append(0)
            self.first_visit.append(None)
            self.last_visit.append(0)
            self.first_attach.append(None)
            if self.first_attach[pos] is None:
                self.first_attach[pos] = t
            # leaf bookkeeping: the newcomer is a leaf; its parent stops
            # being one unless it was the root or already internal
            was_leaf = pos != ROOT and len(tree.children[pos]) == 1
            if was_leaf:
                self.renewal_marks.append(t)
            else:
                self.leaf_count += 1
            d = tree.depth[attached]
            if d > self.max_depth:
                self.max_depth = d
                self.depth_hist.append(0)
            self.depth_hist[d] += 1
            self.attach_log.append((t, pos, walker.parity))
            n = tree.vertex_count
            self._record_snapshots_up_to(n)
            self._record_checkpoints_up_to(n, t, walker.parity_change_count)

        # anchors live on even times t0 >= s, matching the bounce lemma's
        # premise (the forced self-loop warm-up before the first attachment
        # would otherwise contribute degenerate certain returns)
        if t % 2 == 0 and t >= self.config.step_parameter:
            if pos == self._even_prev_pos:
                if not self._run_degs:
                    self._run_degs.append(self._even_prev_deg)
                self._run_degs.append(tree.degree_of(pos))
            else:
                self._close_bounce_run()
            self._even_prev_pos = pos
            self._even_prev_deg = tree.degree_of(pos)
            self.bounce_anchors[self._even_prev_deg] += 1

        if self.config.record_trajectory:
            self.trajectory.append((t, pos, event.via_self_loop, attached))

    def finish(self):
        self._close_bounce_run()

    # -- derived views ----------------------------------------------------

    def leaf_fraction(self) -> float:
        n = len(self.visits)
        return self.leaf_count / n if n else 0.0

    def renewal_gaps(self) -> list[int]:
        """Walker-step gaps between consecutive leaf-neutral additions,
        excluding the open interval after the last mark."""
        marks = self.renewal_marks
        return [b - a for a, b in zip(marks, marks[1:])]

    def bounce_tail_frequency(self, d: int, k: int) -> float:
        """Empirical P(>= k consecutive two-step returns | anchor degree d)."""
        n = self.bounce_anchors[d]
        if n == 0:
            raise ValueError(f"no anchors observed at degree {d}")
        hits = sum(c for (deg, run), c in self.bounce_tails.items()
                   if deg == d and run >= k)
        return hits / n


@dataclass
class RunResult:
    config: SimConfig
    tree: GrowingTree
    walker: WalkerState
    collectors: RunCollectors


def collect_run(config: SimConfig,
                snapshot_grid: Optional[Sequence[int]] = None,
                checkpoint_grid: Optional[Sequence[int]] = None,
                probe_vertices: int = 10) -> RunResult:
    """Run a simulation with the full collector set attached."""
    coll = RunCollectors(config, snapshot_grid, checkpoint_grid, probe_vertices)
    tree, walker = run(config, on_event=coll.record)
    coll.finish()
    return RunResult(config, tree, walker, coll)


def log_grid(lo: int, hi: int, points: int) -> list[int]:
    """Logarithmically spaced integer grid from lo to hi inclusive."""
    if hi <= lo:
        return [hi]
    raw = np.unique(np.round(np.geomspace(lo, hi, points)).astype(int))
    return [int(x) for x in raw if lo <= x <= hi]


# ---------------------------------------------------------------------------
# Empirical distribution machinery

def empirical_ccdf(counts: dict[int, int],
                   condition: str = "all") -> list[tuple[int, float]]:
    """Exact empirical CCDF of a {value: count} histogram.

    ``condition="non_leaf"`` restricts to degree >= 2 before normalizing.
    Returns (k, P(value >= k)) for k from the smallest retained value to the
    largest, on a unit grid.
    """
    if condition not in ("all", "non_leaf"):
        raise ValueError(f"unknown condition {condition!r}")
    items = {k: c for k, c in counts.items()
             if c > 0 and (condition == "all" or k >= 2)}
    if not items:
        raise EmptyHistogramError("no mass in histogram after conditioning")
    total = sum(items.values())
    lo, hi = min(items), max(items)
    out = []
    tail = total
    for k in range(lo, hi + 1):
        out.append((k, tail / total))
        tail -= items.get(k, 0)
    return out


def ccdf_to_counts(ccdf: Sequence[tuple[int, float]], total: int) -> dict[int, int]:
    """Invert ``empirical_ccdf``: difference the CCDF back into a histogram."""
    counts = {}
    for (k, p), (_, p_next) in zip(ccdf, list(ccdf[1:]) + [(None, 0.0)]):
        c = round((p - p_next) * total)
        if c:
            counts[k] = c
    return counts


@dataclass
class TailFit:
    slope: float
    stderr: float
    r_squared: float
    k_range: tuple[int, int]

    @property
    def linear(self) -> bool:
        return self.r_squared >= 0.99


def tail_exponent_fit(ccdf: Sequence[tuple[int, float]], k_min: int,
                      k_max: int, min_points: int = 5) -> TailFit:
    """OLS of log CCDF against log k over [k_min, k_max].

    The slope estimates the CCDF tail exponent; R-squared below 0.99 flags a
    tail that is not power-law linear in log-log coordinates.
    """
    pts = [(k, p) for k, p in ccdf if k_min <= k <= k_max and p > 0 and k > 0]
    if len(pts) < min_points:
        raise FitError(
            f"need >= {min_points} positive points in [{k_min}, {k_max}], "
            f"got {len(pts)}", usable=[k for k, _ in pts])
    x = np.log([k for k, _ in pts])
    y = np.log([p for _, p in pts])
    n = len(x)
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    sxy = float(np.sum((x - xm) * (y - ym)))
    slope = sxy / sxx
    resid = y - (ym + slope * (x - xm))
    ss_res = float(np.sum(resid ** 2))
    ss_tot = float(np.sum((y - ym) ** 2))
    if n > 2:
        stderr = math.sqrt(ss_res / (n - 2) / sxx)
    else:
        stderr = 0.0
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return TailFit(slope, stderr, r2, (pts[0][0], pts[-1][0]))


@dataclass
class DominanceReport:
    direction: str
    margin: float
    checks: list[tuple[int, float, float, bool]]  # (k, empirical, bound, ok)
    worst_violation: float

    @property
    def passed(self) -> bool:
        return all(ok for _, _, _, ok in self.checks)


def dominance_check(empirical: Sequence[tuple[int, float]],
                    bound: Callable[[int], float],
                    direction: str, n_samples: int,
                    alpha: float = 0.01) -> DominanceReport:
    """Check an empirical CCDF against a one-sided analytic bound.

    The concentration margin sqrt(ln(2/alpha) / (2n)) is the two-sided DKW
    band at level alpha per curve; ``direction`` "<=" asserts empirical <=
    bound + margin pointwise, ">=" the reverse with the margin subtracted.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    if direction not in ("<=", ">="):
        raise ValueError(f"direction must be '<=' or '>=', got {direction!r}")
    margin = math.sqrt(math.log(2.0 / alpha) / (2.0 * n_samples))
    checks = []
    worst = 0.0
    for k, p in empirical:
        b = bound(k)
        if direction == "<=":
            ok = p <= b + margin
            gap = p - (b + margin)
        else:
            ok = p >= b - margin
            gap = (b - margin) - p
        worst = max(worst, gap)
        checks.append((k, p, b, ok))
    return DominanceReport(direction, margin, checks, worst)


# ---------------------------------------------------------------------------
# CSV serialization (stable column orders)

def degrees_csv(counts: dict[int, int]) -> list[str]:
    lines = ["degree,count"]
    lines.extend(f"{d},{c}" for d, c in sorted(counts.items()))
    return lines


def ccdf_csv(ccdf: Sequence[tuple[int, float]]) -> list[str]:
    lines = ["k,p"]
    lines.extend(f"{k},{p:.10g}" for k, p in ccdf)
    return lines


def leaves_csv(series: Sequence[tuple[int, int]]) -> list[str]:
    lines = ["n,leaves"]
    lines.extend(f"{n},{l}" for n, l in series)
    return lines


def visits_csv(coll: RunCollectors) -> list[str]:
    lines = ["vertex,count,first_visit,first_attach"]
    for v, c in enumerate(coll.visits):
        fv = coll.first_visit[v]
        fa = coll.first_attach[v]
        lines.append(f"{v},{c},{'' if fv is None else fv},{'' if fa is None else fa}")
    return lines


def bounces_csv(runs: Sequence[tuple[int, int]]) -> list[str]:
    lines = ["start_degree,run_length"]
    lines.extend(f"{d},{m}" for d, m in runs)
    return lines
