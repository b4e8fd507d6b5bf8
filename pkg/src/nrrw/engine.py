"""Core simulation engine for the no-restart random walk (NRRW) tree growth
process.

A walker starts on a single root vertex carrying a self-loop. Every discrete
time step it moves to a uniformly chosen incident edge endpoint (the self-loop
counts twice in the root's degree and is taken with probability 2/deg). After
every ``s`` steps a new degree-one vertex is attached to the walker's current
position; the attachment itself takes zero time. The structure is always a
tree rooted at vertex 0 plus the single self-loop at the root.

Vertex ``j`` is the one attached at time ``j * s`` (the root is vertex 0,
born at time 0).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

ROOT = 0
NO_PARENT = -1


class ConfigError(ValueError):
    """Invalid simulation configuration."""


class UnknownVertexError(KeyError):
    """Vertex label outside the tree."""


class ResourceExhausted(RuntimeError):
    """Run aborted; carries the progress reached when the failure occurred."""

    def __init__(self, message: str, vertices_built: int, clock: int):
        super().__init__(message)
        self.vertices_built = vertices_built
        self.clock = clock


@dataclass(frozen=True)
class SimConfig:
    """Parameters of a single run.

    The run executes ``step_parameter * (target_nodes - 1)`` walker steps so
    that vertices ``1 .. target_nodes - 1`` are attached.
    """

    step_parameter: int
    target_nodes: int
    seed: int
    record_trajectory: bool = False

    def __post_init__(self):
        if self.step_parameter < 1:
            raise ConfigError(f"step_parameter must be >= 1, got {self.step_parameter}")
        if self.target_nodes < 1:
            raise ConfigError(f"target_nodes must be >= 1, got {self.target_nodes}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must fit in 64 bits, got {self.seed}")

    @property
    def total_steps(self) -> int:
        return self.step_parameter * (self.target_nodes - 1)


class PrngStream:
    """Deterministic uniform-integer source.

    Backed by PCG64; distinct ``stream_id`` values select independent streams
    derived from the same seed via ``SeedSequence`` spawn keys, so the same
    ``(seed, stream_id)`` pair always reproduces the same draw sequence.

    ``randbelow(n)`` maps a buffered 62-bit draw into ``[0, n)`` by modular
    reduction; the bias is below ``n * 2**-62``, irrelevant next to the Monte
    Carlo noise floor of any consumer here, and the mapping is exactly
    reproducible.
    """

    _CHUNK = 1 << 15

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = seed
        self.stream_id = stream_id
        ss = np.random.SeedSequence(entropy=seed, spawn_key=(stream_id,))
        self._gen = np.random.Generator(np.random.PCG64(ss))
        self._buf: list[int] = []
        self._pos = 0

    def randbelow(self, n: int) -> int:
        pos = self._pos
        buf = self._buf
        if pos == len(buf):
            buf = self._gen.integers(0, 1 << 62, size=self._CHUNK).tolist()
            self._buf = buf
            pos = 0
        self._pos = pos + 1
        return buf[pos] % n

    def uniform(self) -> float:
        """A float in [0, 1); drawn from the same buffered stream."""
        return self.randbelow(1 << 53) / (1 << 53)


class GrowingTree:
    """Append-only rooted tree plus the root self-loop.

    Vertices are labelled by birth order; per-vertex state lives in flat lists
    so attachment is O(1) and uniform neighbor sampling needs only the degree
    and an index into the child list.
    """

    __slots__ = ("parent", "children", "depth", "birth_time", "step_parameter")

    def __init__(self, step_parameter: int):
        self.step_parameter = step_parameter
        self.parent = [NO_PARENT]
        self.children: list[list[int]] = [[]]
        self.depth = [0]
        self.birth_time = [0]

    @property
    def vertex_count(self) -> int:
        return len(self.parent)

    def _check(self, v: int):
        if not 0 <= v < len(self.parent):
            raise UnknownVertexError(v)

    def degree_of(self, v: int) -> int:
        """Walk degree: the root's self-loop contributes 2."""
        self._check(v)
        base = 2 if v == ROOT else 1
        return base + len(self.children[v])

    def structural_degree(self, v: int) -> int:
        """Degree counting tree edges only (no self-loop)."""
        self._check(v)
        base = 0 if v == ROOT else 1
        return base + len(self.children[v])

    def depth_of(self, v: int) -> int:
        self._check(v)
        return self.depth[v]

    def is_leaf(self, v: int) -> bool:
        return self.degree_of(v) == 1

    def attach(self, pos: int, time: int) -> int:
        """Attach a new degree-one vertex to ``pos``; returns its label."""
        label = len(self.parent)
        self.parent.append(pos)
        self.children[pos].append(label)
        self.children.append([])
        self.depth.append(self.depth[pos] + 1)
        self.birth_time.append(time)
        return label

    def iter_edges(self):
        """Edges as (u, v) pairs, the root self-loop first."""
        yield (ROOT, ROOT)
        for j in range(1, len(self.parent)):
            yield (self.parent[j], j)

    def degree_counts(self) -> dict[int, int]:
        """Histogram {degree: vertex count} of walk degrees."""
        counts: dict[int, int] = {}
        for v in range(len(self.parent)):
            d = (2 if v == ROOT else 1) + len(self.children[v])
            counts[d] = counts.get(d, 0) + 1
        return counts


@dataclass
class WalkerState:
    position: int = ROOT
    clock: int = 0
    parity: int = 0  # (depth(position) + clock) mod 2, tracked incrementally
    parity_change_count: int = 0


@dataclass(slots=True)
class StepEvent:
    time: int
    src: int
    dst: int
    via_self_loop: bool
    attached_vertex: Optional[int]


def init(config: SimConfig) -> tuple[GrowingTree, WalkerState, PrngStream]:
    """Initial state: the root with its self-loop, walker on it, clock zero."""
    tree = GrowingTree(config.step_parameter)
    walker = WalkerState()
    rng = PrngStream(config.seed)
    return tree, walker, rng


def walker_step(config: SimConfig, tree: GrowingTree, walker: WalkerState,
                rng: PrngStream) -> StepEvent:
    """Advance the walker one step, attaching a vertex if the clock hits a
    multiple of the step parameter and the target size has not been reached.

    Neighbor sampling draws an index in ``[0, degree)``: at the root indices
    0 and 1 are the self-loop, the rest are children in birth order; elsewhere
    index 0 is the parent edge.
    """
    pos = walker.position
    ch = tree.children[pos]
    if pos == ROOT:
        i = rng.randbelow(2 + len(ch))
        if i < 2:
            nxt = ROOT
            via_self_loop = True
        else:
            nxt = ch[i - 2]
            via_self_loop = False
    else:
        i = rng.randbelow(1 + len(ch))
        nxt = tree.parent[pos] if i == 0 else ch[i - 1]
        via_self_loop = False

    t = walker.clock + 1
    walker.clock = t
    walker.position = nxt
    if via_self_loop:
        walker.parity ^= 1
        walker.parity_change_count += 1

    attached = None
    if t % config.step_parameter == 0 and len(tree.parent) < config.target_nodes:
        attached = tree.attach(nxt, t)
    return StepEvent(t, pos, nxt, via_self_loop, attached)


Observer = Callable[[StepEvent, GrowingTree, WalkerState], None]


def run(config: SimConfig,
        on_event: Optional[Observer] = None) -> tuple[GrowingTree, WalkerState]:
    """Execute a full run: ``s * (N - 1)`` steps, attaching vertices 1..N-1.

    Bit-deterministic in ``config``. ``on_event`` (if given) is called after
    every step with the event and the live tree/walker state.
    """
    tree, walker, rng = init(config)
    step = walker_step
    try:
        if on_event is None:
            for _ in range(config.total_steps):
                step(config, tree, walker, rng)
        else:
            for _ in range(config.total_steps):
                on_event(step(config, tree, walker, rng), tree, walker)
    except MemoryError as exc:
        raise ResourceExhausted(
            f"out of memory at clock {walker.clock}",
            vertices_built=tree.vertex_count, clock=walker.clock) from exc
    return tree, walker


# ---------------------------------------------------------------------------
# Exports

def edge_list_lines(tree: GrowingTree, config: SimConfig) -> list[str]:
    """Edge list, one "u v" per line, with a parameter header comment."""
    lines = [f"# nrrw s={config.step_parameter} n={config.target_nodes} "
             f"seed={config.seed}"]
    lines.extend(f"{u} {v}" for u, v in tree.iter_edges())
    return lines


def dot_lines(tree: GrowingTree) -> list[str]:
    lines = ["graph nrrw {"]
    lines.extend(f"  {u} -- {v};" for u, v in tree.iter_edges())
    lines.append("}")
    return lines


def trajectory_lines(trajectory: list[tuple[int, int, bool, Optional[int]]]) -> list[str]:
    """CSV lines for a recorded trajectory: t,position,via_self_loop,attached."""
    lines = ["t,position,via_self_loop,attached"]
    for t, pos, via, attached in trajectory:
        lines.append(f"{t},{pos},{int(via)},{'' if attached is None else attached}")
    return lines
