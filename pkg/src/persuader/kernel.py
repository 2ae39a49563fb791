"""Minimal production-system kernel with activation-based declarative memory.

The kernel keeps three kinds of knowledge:

* declarative memory: typed attribute-value facts (chunks), each carrying a
  base activation,
* a fixed set of named single-chunk buffers (goal, imaginal, retrieval,
  aural, vocal) that productions match against,
* procedural memory: IF-THEN productions with integer priorities.

Retrieval scores every matching chunk with

    A = B + sum_j(W_j * S_ji) + e

where B is the chunk's base activation, the sources j are the chunk-valued
slots of the goal chunk, W_j splits a configurable budget equally over the
sources, S_ji is a configured association strength (0 when absent) and e is
zero-mean logistic noise (exactly 0 when the noise scale is 0).  The chunk
with the highest score wins; ties go to the most recently added chunk.

The production cycle matches conditions against buffer contents, fires the
highest-priority matching production (declaration order breaks ties) and
executes its actions: buffer writes, retrieval requests and ``emit``
directives that surface to the caller.  All randomness is drawn from the
random stream handed to the kernel, so runs are reproducible per seed.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Union

BUFFER_NAMES = ("goal", "imaginal", "retrieval", "aural", "vocal")


class KernelError(Exception):
    """Raised for malformed kernel configuration (bad chunks or productions)."""


@dataclass(frozen=True)
class ChunkRef:
    """A slot value that points at another chunk by id."""

    chunk_id: str


SlotValue = Union[str, int, float, ChunkRef]


@dataclass(frozen=True)
class Chunk:
    """A typed attribute-value fact; the unit of declarative memory."""

    id: str
    chunk_type: str
    slots: Mapping[str, SlotValue] = field(default_factory=dict)
    base_activation: float = 0.0

    def __post_init__(self):
        if not self.chunk_type:
            raise KernelError(f"chunk {self.id!r}: chunk_type must be non-empty")
        if not math.isfinite(self.base_activation):
            raise KernelError(f"chunk {self.id!r}: base_activation must be finite")

    def sources(self) -> list[ChunkRef]:
        """Chunk-valued slots, in slot order."""
        return [v for v in self.slots.values() if isinstance(v, ChunkRef)]


@dataclass(frozen=True)
class ActivationParams:
    """Knobs of the activation equation.

    ``association_strengths`` maps (source chunk id, target chunk id) to
    S_ji; absent pairs contribute 0.  ``retrieval_threshold`` defaults to
    -inf so retrieval succeeds whenever anything matches.
    """

    source_weight_total: float = 1.0
    association_strengths: Mapping[tuple[str, str], float] = field(default_factory=dict)
    noise_scale: float = 0.0
    retrieval_threshold: float = float("-inf")

    def __post_init__(self):
        if self.source_weight_total < 0 or not math.isfinite(self.source_weight_total):
            raise KernelError("source_weight_total must be finite and >= 0")
        if self.noise_scale < 0 or not math.isfinite(self.noise_scale):
            raise KernelError("noise_scale must be finite and >= 0")
        for pair, s in self.association_strengths.items():
            if not math.isfinite(s):
                raise KernelError(f"association strength {pair} must be finite")


@dataclass
class Buffer:
    """A named interface slot holding at most one chunk."""

    name: str
    content: Optional[Chunk] = None


# --- production conditions and actions -------------------------------------
#
# Pattern values are constants or variables; a variable is a string starting
# with "?" and binds consistently across all conditions of one production.


def is_var(value) -> bool:
    return isinstance(value, str) and value.startswith("?")


@dataclass(frozen=True)
class BufferMatch:
    """Condition: the buffer holds a chunk of the given type matching the pattern."""

    buffer: str
    chunk_type: str
    pattern: Mapping[str, SlotValue] = field(default_factory=dict)


@dataclass(frozen=True)
class BufferEmpty:
    """Condition: the buffer holds no chunk."""

    buffer: str


Condition = Union[BufferMatch, BufferEmpty]


@dataclass(frozen=True)
class WriteBuffer:
    """Action: put a freshly built chunk into the buffer (replacing any)."""

    buffer: str
    chunk_type: str
    slots: Mapping[str, SlotValue] = field(default_factory=dict)


@dataclass(frozen=True)
class ClearBuffer:
    buffer: str


@dataclass(frozen=True)
class RequestRetrieval:
    """Action: retrieve from declarative memory into the retrieval buffer."""

    chunk_type: str
    pattern: Mapping[str, SlotValue] = field(default_factory=dict)


@dataclass(frozen=True)
class EmitAct:
    """Action: surface a directive payload to the kernel's caller."""

    payload: Mapping[str, SlotValue] = field(default_factory=dict)


Action = Union[WriteBuffer, ClearBuffer, RequestRetrieval, EmitAct]


@dataclass(frozen=True)
class Production:
    """An IF-THEN rule over buffer contents.

    Variables used in actions must be bound by conditions; this is checked
    here, at load time, so a malformed rule never reaches the cycle.
    """

    name: str
    conditions: Sequence[Condition]
    actions: Sequence[Action]
    priority: int = 0

    def __post_init__(self):
        bound = set()
        for cond in self.conditions:
            if isinstance(cond, BufferMatch):
                bound.update(v for v in cond.pattern.values() if is_var(v))
        used = set()
        retrievals = 0
        for act in self.actions:
            if isinstance(act, (WriteBuffer, EmitAct)):
                values = act.slots.values() if isinstance(act, WriteBuffer) else act.payload.values()
                used.update(v for v in values if is_var(v))
            elif isinstance(act, RequestRetrieval):
                retrievals += 1
                used.update(v for v in act.pattern.values() if is_var(v))
        unbound = used - bound
        if unbound:
            raise KernelError(
                f"production {self.name!r}: unbound variables in actions: {sorted(unbound)}"
            )
        if retrievals > 1:
            raise KernelError(f"production {self.name!r}: at most one retrieval request allowed")


@dataclass(frozen=True)
class RetrievalRequest:
    chunk_type: str
    pattern: Mapping[str, SlotValue] = field(default_factory=dict)


@dataclass(frozen=True)
class StepResult:
    """Outcome of one production-cycle step."""

    fired: str
    directives: tuple[dict, ...] = ()


class KernelState:
    """Declarative memory, buffers, productions and the session random stream.

    One KernelState belongs to one logical session; instances share no
    global state, so independent sessions may run in parallel.
    """

    def __init__(
        self,
        productions: Sequence[Production] = (),
        params: ActivationParams = ActivationParams(),
        rng: Optional[random.Random] = None,
    ):
        self.declarative_memory: list[Chunk] = []
        self._ids: set[str] = set()
        self._gensym = 0
        self.buffers: dict[str, Buffer] = {n: Buffer(n) for n in BUFFER_NAMES}
        self.productions: list[Production] = list(productions)
        self.params = params
        self.rng = rng if rng is not None else random.Random(0)
        names = [p.name for p in self.productions]
        if len(names) != len(set(names)):
            raise KernelError("production names must be unique")

    def add_chunk(self, chunk: Chunk) -> Chunk:
        if chunk.id in self._ids:
            raise KernelError(f"duplicate chunk id {chunk.id!r} in declarative memory")
        self._ids.add(chunk.id)
        self.declarative_memory.append(chunk)
        return chunk

    def set_buffer(self, name: str, chunk: Optional[Chunk]) -> None:
        self.buffers[name].content = chunk


def logistic_noise(scale: float, rng: random.Random) -> float:
    """Zero-mean logistic sample; exactly 0.0 when scale is 0 (no rng draw)."""
    if scale == 0:
        return 0.0
    u = rng.random()
    while u <= 0.0:  # random() may return 0; log needs (0, 1)
        u = rng.random()
    return scale * math.log(u / (1.0 - u))


def activation(
    chunk: Chunk,
    goal: Optional[Chunk],
    params: ActivationParams,
    rng: random.Random,
) -> float:
    """Score one chunk: base + spreading from the goal's chunk-valued slots + noise."""
    total = chunk.base_activation
    sources = goal.sources() if goal is not None else []
    if sources:
        w = params.source_weight_total / len(sources)
        for src in sources:
            total += w * params.association_strengths.get((src.chunk_id, chunk.id), 0.0)
    return total + logistic_noise(params.noise_scale, rng)


def _matches_pattern(chunk: Chunk, chunk_type: str, pattern: Mapping[str, SlotValue]) -> bool:
    if chunk.chunk_type != chunk_type:
        return False
    for slot, want in pattern.items():
        if slot not in chunk.slots or chunk.slots[slot] != want:
            return False
    return True


def retrieve(
    request: RetrievalRequest,
    state: KernelState,
    goal: Optional[Chunk],
    params: ActivationParams,
) -> Optional[Chunk]:
    """Return the matching chunk with maximal activation, or None on failure.

    Candidates are scored in insertion order and a later chunk wins a tied
    score, so recency breaks ties.  Failure (no match, or best score under
    the retrieval threshold) is a value, not an error.
    """
    best: Optional[Chunk] = None
    best_a = float("-inf")
    for chunk in state.declarative_memory:
        if not _matches_pattern(chunk, request.chunk_type, request.pattern):
            continue
        a = activation(chunk, goal, params, state.rng)
        if a >= best_a:
            best, best_a = chunk, a
    if best is None or best_a < params.retrieval_threshold:
        return None
    return best


def _match_condition(cond: Condition, state: KernelState, env: dict) -> Optional[dict]:
    """Try one condition against the buffers; return the extended bindings or None."""
    if isinstance(cond, BufferEmpty):
        return env if state.buffers[cond.buffer].content is None else None
    chunk = state.buffers[cond.buffer].content
    if chunk is None or chunk.chunk_type != cond.chunk_type:
        return None
    out = dict(env)
    for slot, want in cond.pattern.items():
        if slot not in chunk.slots:
            return None
        have = chunk.slots[slot]
        if is_var(want):
            if want in out and out[want] != have:
                return None
            out[want] = have
        elif have != want:
            return None
    return out


def _substitute(mapping: Mapping[str, SlotValue], env: dict) -> dict:
    return {k: (env[v] if is_var(v) else v) for k, v in mapping.items()}


def match_production(production: Production, state: KernelState) -> Optional[dict]:
    """Bindings if every condition holds against the current buffers, else None."""
    env: Optional[dict] = {}
    for cond in production.conditions:
        env = _match_condition(cond, state, env)
        if env is None:
            return None
    return env


def step(state: KernelState) -> Optional[StepResult]:
    """Run one production cycle; None means quiescent (nothing matched)."""
    candidate: Optional[tuple[Production, dict]] = None
    for prod in state.productions:  # declaration order breaks priority ties
        env = match_production(prod, state)
        if env is not None and (candidate is None or prod.priority > candidate[0].priority):
            candidate = (prod, env)
    if candidate is None:
        return None
    prod, env = candidate
    directives: list[dict] = []
    for act in prod.actions:
        if isinstance(act, WriteBuffer):
            state._gensym += 1
            chunk = Chunk(
                id=f"_{prod.name}_{state._gensym}",
                chunk_type=act.chunk_type,
                slots=_substitute(act.slots, env),
            )
            state.set_buffer(act.buffer, chunk)
        elif isinstance(act, ClearBuffer):
            state.set_buffer(act.buffer, None)
        elif isinstance(act, RequestRetrieval):
            request = RetrievalRequest(act.chunk_type, _substitute(act.pattern, env))
            goal = state.buffers["goal"].content
            state.set_buffer("retrieval", retrieve(request, state, goal, state.params))
        elif isinstance(act, EmitAct):
            directives.append(_substitute(act.payload, env))
    return StepResult(fired=prod.name, directives=tuple(directives))
