"""Fountain encoding and the peeling decoder with degree-two doping.

Coded symbols are XORs of source-packet subsets.  The decoder peels:
processing a ripple symbol removes it from every adjacent output symbol,
and any output thereby reduced to a single neighbor releases that neighbor
into the ripple.  When the ripple empties before all sources are recovered,
a doping step fetches one true source packet from an oracle, chosen
uniformly among inputs adjacent to the lowest-degree remaining outputs
(degree two first, then three, and so on; when no outputs remain the
choice is uniform over the undecoded, i.e. uncovered, symbols).
"""

from __future__ import annotations

from collections import deque
from collections.abc import Callable, Iterable, Iterator, Sequence
from dataclasses import dataclass

import numpy as np

from .degrees import DegreeDistribution, sample_degree
from .errors import (
    DopingUnavailableError,
    InvalidParameterError,
    MalformedInputError,
    StalledDecoderError,
)

RIPPLE_DISCIPLINES = ("fifo", "lifo", "random")


@dataclass(frozen=True)
class SourceBlock:
    """k fixed-length source packets, indexed 1..k."""

    k: int
    payload_len: int
    packets: tuple[bytes, ...]

    def __post_init__(self):
        if self.k < 1 or len(self.packets) != self.k:
            raise InvalidParameterError("packets must hold exactly k entries")
        if self.payload_len < 1 or any(
            len(p) != self.payload_len for p in self.packets
        ):
            raise InvalidParameterError("all payloads must have length payload_len")

    @classmethod
    def random(
        cls, k: int, payload_len: int, rng: np.random.Generator
    ) -> "SourceBlock":
        raw = rng.integers(0, 256, size=(k, payload_len), dtype=np.uint8)
        return cls(k=k, payload_len=payload_len, packets=tuple(r.tobytes() for r in raw))

    def packet(self, index: int) -> bytes:
        if not 1 <= index <= self.k:
            raise InvalidParameterError(f"source index {index} outside 1..{self.k}")
        return self.packets[index - 1]

    def xor_of(self, indices: Iterable[int]) -> bytes:
        acc = 0
        for i in indices:
            acc ^= int.from_bytes(self.packet(i), "big")
        return acc.to_bytes(self.payload_len, "big")


@dataclass(frozen=True)
class CodedSymbol:
    """XOR of the source packets named by ``neighbors`` (sorted, distinct)."""

    neighbors: tuple[int, ...]
    payload: bytes

    def __post_init__(self):
        if len(self.neighbors) < 1:
            raise InvalidParameterError("a coded symbol needs at least one neighbor")
        if list(self.neighbors) != sorted(set(self.neighbors)):
            raise InvalidParameterError("neighbors must be sorted and distinct")

    @property
    def degree(self) -> int:
        return len(self.neighbors)


def encode_symbol(
    block: SourceBlock, dist: DegreeDistribution, rng: np.random.Generator
) -> CodedSymbol:
    """Draw a degree, pick that many distinct sources uniformly, XOR them."""
    if dist.k != block.k:
        raise InvalidParameterError(
            f"distribution support {dist.k} != block size {block.k}"
        )
    d = sample_degree(dist, rng)
    neighbors = tuple(sorted(int(i) + 1 for i in rng.choice(block.k, size=d, replace=False)))
    return CodedSymbol(neighbors=neighbors, payload=block.xor_of(neighbors))


def encode_symbols(
    block: SourceBlock, dist: DegreeDistribution, n: int, rng: np.random.Generator
) -> list[CodedSymbol]:
    return [encode_symbol(block, dist, rng) for _ in range(n)]


@dataclass(frozen=True)
class StepRecord:
    """One decoder step: kind is 'init', 'decode' or 'dope'."""

    kind: str
    releases: int
    defected: int
    ripple_size: int
    dope_level: int | None = None  # residual degree doped into; 0 = uncovered poll


class DecoderState:
    """Mutable peeling-decoder state; single-threaded per trial.

    Outputs keep a residual neighbor set and a residual payload (original
    payload with every decoded member XORed out).  An output that releases
    or empties is spent.  The ripple holds (source, payload) pairs without
    duplicates; redundant releases are dropped and counted as defected.
    """

    def __init__(self, k: int, payload_len: int, ripple_discipline: str = "fifo"):
        if ripple_discipline not in RIPPLE_DISCIPLINES:
            raise InvalidParameterError(
                f"ripple_discipline must be one of {RIPPLE_DISCIPLINES}"
            )
        self.k = k
        self.payload_len = payload_len
        self.ripple_discipline = ripple_discipline
        self.undecoded: set[int] = set(range(1, k + 1))
        self.decoded: dict[int, int] = {}
        self.ripple: deque[tuple[int, int]] = deque()
        self._ripple_members: set[int] = set()
        self._out_neighbors: list[set[int]] = []
        self._out_payload: list[int] = []
        self._adjacency: dict[int, set[int]] = {}
        self.doped: list[int] = []
        self.dope_levels: list[int] = []
        self.history: list[StepRecord] = []
        self.defected_total = 0

    # -- inspection ---------------------------------------------------------

    @property
    def decoded_count(self) -> int:
        return len(self.decoded)

    @property
    def ripple_size(self) -> int:
        return len(self.ripple)

    @property
    def finished(self) -> bool:
        return not self.undecoded

    def iter_outputs(self) -> Iterator[tuple[frozenset[int], int]]:
        """Live (unreleased) outputs as (residual neighbors, residual payload)."""
        for nbrs, payload in zip(self._out_neighbors, self._out_payload):
            if len(nbrs) >= 2:
                yield frozenset(nbrs), payload

    def recovered_payload(self, index: int) -> bytes:
        return self.decoded[index].to_bytes(self.payload_len, "big")

    # -- construction -------------------------------------------------------

    def _add_symbol(self, sym: CodedSymbol) -> None:
        if sym.neighbors[-1] > self.k or sym.neighbors[0] < 1:
            raise MalformedInputError(
                f"symbol neighbors {sym.neighbors} outside 1..{self.k}"
            )
        oid = len(self._out_neighbors)
        self._out_neighbors.append(set(sym.neighbors))
        self._out_payload.append(int.from_bytes(sym.payload, "big"))
        for src in sym.neighbors:
            self._adjacency.setdefault(src, set()).add(oid)

    def _seed_ripple(self) -> None:
        releases = defected = 0
        for oid, nbrs in enumerate(self._out_neighbors):
            if len(nbrs) == 1:
                (src,) = nbrs
                nbrs.clear()
                self._adjacency[src].discard(oid)
                if src in self._ripple_members:
                    defected += 1
                else:
                    self.ripple.append((src, self._out_payload[oid]))
                    self._ripple_members.add(src)
                    releases += 1
        self.defected_total += defected
        self.history.append(StepRecord("init", releases, defected, len(self.ripple)))

    # -- core peeling -------------------------------------------------------

    def _pop_ripple(self, rng: np.random.Generator | None) -> tuple[int, int]:
        if self.ripple_discipline == "fifo":
            return self.ripple.popleft()
        if self.ripple_discipline == "lifo":
            return self.ripple.pop()
        if rng is None:
            raise InvalidParameterError("random ripple discipline needs an rng")
        pick = int(rng.integers(len(self.ripple)))
        self.ripple.rotate(-pick)
        item = self.ripple.popleft()
        self.ripple.rotate(pick)
        return item

    def _absorb(self, src: int, payload: int) -> tuple[int, int]:
        """Record src as decoded and propagate; returns (releases, defected)."""
        self.decoded[src] = payload
        self.undecoded.discard(src)
        releases = defected = 0
        for oid in self._adjacency.pop(src, ()):
            nbrs = self._out_neighbors[oid]
            nbrs.discard(src)
            self._out_payload[oid] ^= payload
            if len(nbrs) == 1:
                (last,) = nbrs
                nbrs.clear()
                self._adjacency[last].discard(oid)
                if last in self._ripple_members or last in self.decoded:
                    defected += 1
                else:
                    self.ripple.append((last, self._out_payload[oid]))
                    self._ripple_members.add(last)
                    releases += 1
        self.defected_total += defected
        return releases, defected


def init_decoder(
    k: int,
    symbols: Sequence[CodedSymbol],
    payload_len: int | None = None,
    ripple_discipline: str = "fifo",
) -> DecoderState:
    """Build adjacency from the collected symbols and seed the ripple."""
    if payload_len is None:
        payload_len = len(symbols[0].payload) if symbols else 1
    state = DecoderState(k, payload_len, ripple_discipline)
    for sym in symbols:
        state._add_symbol(sym)
    state._seed_ripple()
    return state


def process_ripple_symbol(
    state: DecoderState, rng: np.random.Generator | None = None
) -> int:
    """Decode one ripple symbol; returns the number of new ripple entries."""
    if not state.ripple:
        raise StalledDecoderError("ripple is empty; dope or stop")
    src, payload = state._pop_ripple(rng)
    state._ripple_members.discard(src)
    releases, defected = state._absorb(src, payload)
    state.history.append(StepRecord("decode", releases, defected, len(state.ripple)))
    return releases


def dope_degree_two(
    state: DecoderState,
    oracle: Callable[[int], bytes],
    rng: np.random.Generator,
) -> int:
    """Fetch one true source packet to unlock a stalled decoder.

    Selection is uniform over the distinct inputs adjacent to the remaining
    outputs of lowest residual degree (degree two when available); with no
    outputs left the uncovered symbols are polled uniformly.  The fetched
    packet is absorbed exactly like a ripple symbol.
    """
    if state.ripple:
        raise InvalidParameterError("doping requires an empty ripple")
    if state.finished:
        raise InvalidParameterError("decoding already complete")
    lowest: int | None = None
    for nbrs in state._out_neighbors:
        d = len(nbrs)
        if d >= 2 and (lowest is None or d < lowest):
            lowest = d
            if d == 2:
                break
    if lowest is None:
        candidates = sorted(state.undecoded)
        level = 0
    else:
        pool: set[int] = set()
        for nbrs in state._out_neighbors:
            if len(nbrs) == lowest:
                pool |= nbrs
        candidates = sorted(pool)
        level = lowest
    src = candidates[int(rng.integers(len(candidates)))]
    try:
        packet = oracle(src)
    except Exception as exc:  # noqa: BLE001 - oracle contract is opaque
        raise DopingUnavailableError(f"oracle failed for source {src}") from exc
    if packet is None:
        raise DopingUnavailableError(f"oracle returned nothing for source {src}")
    releases, defected = state._absorb(src, int.from_bytes(packet, "big"))
    state.doped.append(src)
    state.dope_levels.append(level)
    state.history.append(
        StepRecord("dope", releases, defected, len(state.ripple), dope_level=level)
    )
    return src


@dataclass(frozen=True)
class DecodeReport:
    """Outcome of one doped decode run."""

    success: bool
    k: int
    k_s: int
    k_d: int
    doped_indices: tuple[int, ...]
    dope_levels: tuple[int, ...]  # residual degree doped into; 0 = uncovered poll
    interdoping_yields: tuple[int, ...]
    ripple_trajectory: tuple[int, ...]
    defected_total: int
    recovered: dict[int, bytes]

    @property
    def doping_ratio(self) -> float:
        return self.k_d / self.k

    @property
    def fallback_dopings(self) -> int:
        """Dopings that found no degree-two output (degree 3+, or uncovered)."""
        return sum(1 for lv in self.dope_levels if lv != 2)

    def csv_row(self) -> dict[str, object]:
        return {
            "k": self.k,
            "k_s": self.k_s,
            "k_d": self.k_d,
            "p_d": 100.0 * self.k_d / self.k,
            "success": self.success,
        }


def decode_with_doping(
    block: SourceBlock,
    symbols: Sequence[CodedSymbol],
    rng: np.random.Generator,
    ripple_discipline: str = "fifo",
    oracle: Callable[[int], bytes] | None = None,
) -> DecodeReport:
    """Run the full decode loop: dope whenever the ripple is empty.

    Stall times are logged at each doping; interdoping yields are their
    successive differences (the very first yield counts the decodes that
    happened before the first stall).
    """
    state = init_decoder(block.k, symbols, block.payload_len, ripple_discipline)
    if oracle is None:
        oracle = block.packet
    stall_steps: list[int] = []
    while not state.finished:
        if state.ripple:
            process_ripple_symbol(state, rng)
        else:
            stall_steps.append(state.decoded_count)
            dope_degree_two(state, oracle, rng)
    yields = tuple(
        int(b) - int(a) for a, b in zip([0] + stall_steps[:-1], stall_steps)
    )
    trajectory = tuple(rec.ripple_size for rec in state.history)
    recovered = {i: state.recovered_payload(i) for i in sorted(state.decoded)}
    return DecodeReport(
        success=state.finished,
        k=block.k,
        k_s=len(symbols),
        k_d=len(state.doped),
        doped_indices=tuple(state.doped),
        dope_levels=tuple(state.dope_levels),
        interdoping_yields=yields,
        ripple_trajectory=trajectory,
        defected_total=state.defected_total,
        recovered=recovered,
    )


def unreleased_degree_histogram(state: DecoderState) -> dict[int, float]:
    """Empirical pmf of residual degrees among unreleased (degree >= 2) outputs."""
    counts: dict[int, int] = {}
    for nbrs in state._out_neighbors:
        d = len(nbrs)
        if d >= 2:
            counts[d] = counts.get(d, 0) + 1
    total = sum(counts.values())
    if total == 0:
        return {}
    return {d: c / total for d, c in sorted(counts.items())}
