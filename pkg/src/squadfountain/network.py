"""Circular squad network: dissemination, decentralized storage, collection.

k relays sit on a ring, relay i holding source packet i.  Between each
adjacent relay pair lives a squad of storage nodes that overhears both
relays.  Packets are disseminated either as plain copies (each relay
forwards every packet once, both directions) or as degree-two combinations
(each relay XORs the packets arriving from its two sides, halving the
number of transmission rounds).  Storage nodes pre-plan a degree and a
slot subset, then store the XOR of the overheard transmissions in those
slots.  A collector drains nearby squads for the upfront symbols and polls
source relays directly whenever the decoder needs doping.

Networks are built lazily: squad sizes are drawn eagerly, per-node plans
are materialized on first touch from a counter-based per-node stream, so
large networks cost only what a collection actually visits.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import IO

import numpy as np

from .codec import CodedSymbol, DecodeReport, SourceBlock, decode_with_doping
from .degrees import DegreeDistribution, ideal_soliton, robust_soliton, sample_degree
from .errors import ExhaustedNetworkError, InvalidParameterError

SQUAD_SIZE_MODELS = ("fixed", "poisson")
DISSEMINATION_MODES = ("degree_one", "degree_two_combining")
STORAGE_MODES = ("coupon", "is_combining", "rs_combining")
STORAGE_INPUTS = ("degree_one_inputs", "degree_two_inputs")


def ring_distance(k: int, i: int, j: int) -> int:
    """Hops between relays i and j along the shorter arc."""
    d = abs(i - j) % k
    return min(d, k - d)


def _wrap(k: int, i: int) -> int:
    """Map any integer onto relay labels 1..k."""
    return (i - 1) % k + 1


def combining_rounds(k: int) -> int:
    """Rounds after which every relay has seen every packet: ceil((k-1)/2)."""
    return k // 2


@dataclass(frozen=True)
class NetworkConfig:
    k: int
    h: float
    squad_size_model: str = "fixed"
    dissemination: str = "degree_one"
    storage: str = "is_combining"
    storage_combine_input: str = "degree_one_inputs"
    rs_c: float = 0.1
    rs_delta: float = 0.5
    payload_len: int = 32

    def __post_init__(self):
        if self.k < 3:
            raise InvalidParameterError(f"k must be >= 3, got {self.k}")
        if self.h < 1:
            raise InvalidParameterError(f"h must be >= 1, got {self.h}")
        if self.squad_size_model not in SQUAD_SIZE_MODELS:
            raise InvalidParameterError(f"unknown squad_size_model {self.squad_size_model!r}")
        if self.dissemination not in DISSEMINATION_MODES:
            raise InvalidParameterError(f"unknown dissemination {self.dissemination!r}")
        if self.storage not in STORAGE_MODES:
            raise InvalidParameterError(f"unknown storage {self.storage!r}")
        if self.storage_combine_input not in STORAGE_INPUTS:
            raise InvalidParameterError(
                f"unknown storage_combine_input {self.storage_combine_input!r}"
            )
        if self.squad_size_model == "fixed" and self.h != int(self.h):
            raise InvalidParameterError("fixed squad model needs integer h")
        if (
            self.storage_combine_input == "degree_two_inputs"
            and self.dissemination != "degree_two_combining"
        ):
            raise InvalidParameterError(
                "degree_two_inputs requires degree_two_combining dissemination"
            )

    def degree_distribution(self) -> DegreeDistribution | None:
        if self.storage == "is_combining":
            return ideal_soliton(self.k)
        if self.storage == "rs_combining":
            return robust_soliton(self.k, self.rs_c, self.rs_delta)
        return None  # coupon nodes always store a single packet


@dataclass(frozen=True)
class StorageNode:
    """A storage node's pre-planned behavior.

    For degree-one inputs (and coupon storage) ``slots`` are source indices;
    for degree-two inputs they index the node's overheard transmission list
    (left relay's rounds first, then the right relay's).
    """

    gap: int
    index: int
    degree: int
    slots: tuple[int, ...]


@dataclass(frozen=True)
class Transmission:
    round: int
    relay: int
    neighbors: tuple[int, ...]
    payload: bytes


class TransmissionSchedule:
    """Per-relay transmissions for one dissemination mode, computed on demand."""

    def __init__(self, mode: str, block: SourceBlock):
        self.mode = mode
        self.block = block
        self.k = block.k
        # every relay has received every packet after this many rounds
        self.rounds = combining_rounds(self.k)

    def transmissions_per_relay(self) -> int:
        return self.k if self.mode == "degree_one" else self.rounds

    def relay_transmissions(self, relay: int) -> list[Transmission]:
        k, block = self.k, self.block
        out: list[Transmission] = []
        if self.mode == "degree_one":
            out.append(Transmission(1, relay, (relay,), block.packet(relay)))
            seen = {relay}
            r = 2
            while len(seen) < k:
                for src in (_wrap(k, relay - r + 1), _wrap(k, relay + r - 1)):
                    if src not in seen:
                        seen.add(src)
                        out.append(Transmission(r, relay, (src,), block.packet(src)))
                r += 1
            return out
        out.append(Transmission(1, relay, (relay,), block.packet(relay)))
        for r in range(2, self.rounds + 1):
            left = _wrap(k, relay - r + 1)
            right = _wrap(k, relay + r - 1)
            nbrs = tuple(sorted({left, right}))
            out.append(Transmission(r, relay, nbrs, block.xor_of(nbrs)))
        return out

    def overheard(self, gap: int) -> list[Transmission]:
        """Everything a shared node between relays gap and gap+1 hears."""
        right = _wrap(self.k, gap + 1)
        return self.relay_transmissions(gap) + self.relay_transmissions(right)

    def verify(self) -> bool:
        """True when every relay ends up holding all k packets bit-exact."""
        if self.mode == "degree_one":
            return all(self._collect_degree_one(i) for i in range(1, self.k + 1))
        return all(self._online_decode(i) for i in range(1, self.k + 1))

    def _collect_degree_one(self, relay: int) -> bool:
        k, block = self.k, self.block
        got = {relay: block.packet(relay)}
        for r in range(1, self.rounds + 1):
            for src in (_wrap(k, relay - r), _wrap(k, relay + r)):
                got[src] = block.packet(src)
        return len(got) == k and all(got[i] == block.packet(i) for i in got)

    def _online_decode(self, relay: int) -> bool:
        """Replay the combining rounds with the rolling buffer discipline.

        Rounds r >= 4 overwrite the packets recovered three rounds earlier,
        so the live buffer never grows past eight packets; decoding each
        incoming combination must find its matching packet still buffered.
        """
        k, block = self.k, self.block
        buffer: dict[int, bytes] = {relay: block.packet(relay)}
        recovered: dict[int, bytes] = dict(buffer)

        def learn(src: int, payload: bytes) -> None:
            buffer[src] = payload
            recovered[src] = payload

        learn(_wrap(k, relay - 1), block.packet(_wrap(k, relay - 1)))
        learn(_wrap(k, relay + 1), block.packet(_wrap(k, relay + 1)))
        for r in range(2, self.rounds + 1):
            # the two round-r receptions pair one known with one new packet
            for known, new in (
                (_wrap(k, relay + r - 2), _wrap(k, relay - r)),
                (_wrap(k, relay - r + 2), _wrap(k, relay + r)),
            ):
                combo = block.xor_of({known, new})
                if known not in buffer:
                    return False  # overwrite rule evicted a packet still needed
                plain = bytes(a ^ b for a, b in zip(combo, buffer[known]))
                if plain != block.packet(new):
                    return False
                learn(new, plain)
            evict = r - 3  # drop the recoveries of round r-3 (own packet at r=4)
            if evict >= 1:
                for old in {_wrap(k, relay - evict + 1), _wrap(k, relay + evict - 1)}:
                    buffer.pop(old, None)
            if len(buffer) > 8:
                return False
        return len(recovered) == k and all(
            recovered[i] == block.packet(i) for i in recovered
        )

    def dump(self, fp: IO[str]) -> None:
        for relay in range(1, self.k + 1):
            for t in self.relay_transmissions(relay):
                nbrs = "+".join(str(n) for n in t.neighbors)
                fp.write(f"relay={relay} round={t.round} sources={nbrs}\n")


class Network:
    """Relays, squads, and lazily planned storage nodes."""

    def __init__(
        self,
        cfg: NetworkConfig,
        block: SourceBlock,
        squad_sizes: np.ndarray,
        node_key: int,
    ):
        self.cfg = cfg
        self.block = block
        self.squad_sizes = squad_sizes
        self._node_key = node_key
        self._dist = cfg.degree_distribution()
        self._node_cache: dict[tuple[int, int], StorageNode] = {}
        self._slot_count = (
            2 * combining_rounds(cfg.k)
            if cfg.storage_combine_input == "degree_two_inputs"
            else cfg.k
        )
        self.stored: "SymbolStore | None" = None

    @property
    def k(self) -> int:
        return self.cfg.k

    @property
    def total_storage_nodes(self) -> int:
        return int(self.squad_sizes.sum())

    def squad_size(self, gap: int) -> int:
        return int(self.squad_sizes[gap - 1])

    def node(self, gap: int, index: int) -> StorageNode:
        key = (gap, index)
        cached = self._node_cache.get(key)
        if cached is not None:
            return cached
        if not 1 <= gap <= self.k or not 0 <= index < self.squad_size(gap):
            raise InvalidParameterError(f"no node {index} in squad {gap}")
        rng = np.random.Generator(
            np.random.Philox(np.random.SeedSequence(self._node_key, spawn_key=(gap, index)))
        )
        node = self._plan_node(gap, index, rng)
        self._node_cache[key] = node
        return node

    def _plan_node(self, gap: int, index: int, rng: np.random.Generator) -> StorageNode:
        cfg = self.cfg
        if cfg.storage == "coupon":
            src = int(rng.integers(1, self.k + 1))
            return StorageNode(gap, index, 1, (src,))
        d = min(sample_degree(self._dist, rng), self._slot_count)
        if cfg.storage_combine_input == "degree_one_inputs":
            slots = tuple(
                sorted(int(i) + 1 for i in rng.choice(self.k, size=d, replace=False))
            )
            return StorageNode(gap, index, d, slots)
        # degree-two inputs: chosen slot subsets may cancel outright; replan
        for _ in range(100):
            slots = tuple(
                sorted(int(i) for i in rng.choice(self._slot_count, size=d, replace=False))
            )
            if self._slot_symmetric_difference(gap, slots):
                return StorageNode(gap, index, d, slots)
        raise InvalidParameterError(
            f"could not plan a non-degenerate slot set for node {(gap, index)}"
        )

    def _slot_neighbors(self, gap: int, slot: int) -> tuple[int, ...]:
        """Neighbor set of an overheard degree-two-mode slot, by construction."""
        rounds = combining_rounds(self.k)
        relay = gap if slot < rounds else _wrap(self.k, gap + 1)
        r = slot % rounds + 1
        if r == 1:
            return (relay,)
        return tuple(sorted({_wrap(self.k, relay - r + 1), _wrap(self.k, relay + r - 1)}))

    def _slot_symmetric_difference(self, gap: int, slots: tuple[int, ...]) -> frozenset[int]:
        acc: set[int] = set()
        for slot in slots:
            acc ^= set(self._slot_neighbors(gap, slot))
        return frozenset(acc)

    def dump(self, fp: IO[str]) -> None:
        for gap in range(1, self.k + 1):
            for idx in range(self.squad_size(gap)):
                node = self.node(gap, idx)
                slots = ",".join(str(s) for s in node.slots)
                fp.write(f"squad={gap} node={idx} degree={node.degree} slots={slots}\n")


def build_network(cfg: NetworkConfig, rng: np.random.Generator) -> Network:
    """Draw the source block and squad sizes; node plans follow lazily."""
    block = SourceBlock.random(cfg.k, cfg.payload_len, rng)
    if cfg.squad_size_model == "fixed":
        sizes = np.full(cfg.k, int(cfg.h), dtype=np.int64)
    else:
        sizes = rng.poisson(cfg.h, size=cfg.k).astype(np.int64)
    node_key = int(rng.integers(0, 2**63 - 1))
    return Network(cfg, block, sizes, node_key)


def disseminate_degree_one(net: Network) -> TransmissionSchedule:
    """Plain forwarding: every relay transmits each packet exactly once."""
    return TransmissionSchedule("degree_one", net.block)


def disseminate_degree_two(net: Network) -> TransmissionSchedule:
    """Degree-two combining: own packet, then left+right XORs each round."""
    return TransmissionSchedule("degree_two_combining", net.block)


class SymbolStore:
    """Lazily materialized stored symbols, one per storage node."""

    def __init__(self, net: Network, schedule: TransmissionSchedule):
        if net.cfg.dissemination != schedule.mode:
            raise InvalidParameterError(
                f"schedule mode {schedule.mode!r} does not match config"
            )
        self.net = net
        self.schedule = schedule
        self._cache: dict[tuple[int, int], CodedSymbol] = {}
        self._heard_cache: dict[int, list[Transmission]] = {}

    def _overheard(self, gap: int) -> list[Transmission]:
        heard = self._heard_cache.get(gap)
        if heard is None:
            heard = self.schedule.overheard(gap)
            self._heard_cache[gap] = heard
        return heard

    def symbol(self, gap: int, index: int) -> CodedSymbol:
        key = (gap, index)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        node = self.net.node(gap, index)
        if self.net.cfg.storage_combine_input == "degree_two_inputs":
            heard = self._overheard(gap)
            nbrs: set[int] = set()
            acc = 0
            for slot in node.slots:
                t = heard[slot]
                nbrs ^= set(t.neighbors)
                acc ^= int.from_bytes(t.payload, "big")
            payload = acc.to_bytes(self.net.block.payload_len, "big")
            sym = CodedSymbol(tuple(sorted(nbrs)), payload)
        else:
            sym = CodedSymbol(node.slots, self.net.block.xor_of(node.slots))
        self._cache[key] = sym
        return sym

    def all_symbols(self) -> dict[tuple[int, int], CodedSymbol]:
        return {
            (gap, idx): self.symbol(gap, idx)
            for gap in range(1, self.net.k + 1)
            for idx in range(self.net.squad_size(gap))
        }


def storage_listen(net: Network, schedule: TransmissionSchedule) -> SymbolStore:
    """Bind the network's planned nodes to a dissemination schedule."""
    store = SymbolStore(net, schedule)
    net.stored = store
    return store


@dataclass(frozen=True)
class CollectionReport:
    k_s: int
    s: int
    supersquad_hops: float
    squads_drained: tuple[int, ...]
    k_d: int = 0
    doped_hop_costs: tuple[int, ...] = field(default=())

    @property
    def doping_hops(self) -> int:
        return int(sum(self.doped_hop_costs))


def _drain_order(k: int, collector: int):
    """Squad gaps by distance from the collector, alternating sides.

    Each of the k gaps appears exactly once; for even k the antipodal
    offsets +-k/2 name the same gap.
    """
    yield collector
    for m in range(1, k // 2 + 1):
        left = _wrap(k, collector - m)
        right = _wrap(k, collector + m)
        yield left
        if right != left:
            yield right


def collect(
    net: Network, collector_relay: int, k_s: int
) -> tuple[list[CodedSymbol], CollectionReport]:
    """Drain squads outward from the collector until k_s symbols are gathered.

    A symbol from the j-th squad drained (0-based) is charged j/2 + 1 hops,
    which makes a full supersquad average exactly (s-1)/4 + 1 per symbol.
    """
    if net.stored is None:
        raise InvalidParameterError("run storage_listen before collecting")
    if not 1 <= collector_relay <= net.k:
        raise InvalidParameterError(f"collector relay {collector_relay} outside 1..{net.k}")
    if k_s > net.total_storage_nodes:
        raise ExhaustedNetworkError(
            f"need {k_s} symbols but the network stores only {net.total_storage_nodes}"
        )
    symbols: list[CodedSymbol] = []
    drained: list[int] = []
    hops = 0.0
    j = 0
    for gap in _drain_order(net.k, collector_relay):
        if len(symbols) >= k_s:
            break
        size = net.squad_size(gap)
        if size == 0:
            continue  # empty squads cost nothing and are not part of the supersquad
        drained.append(gap)
        per_symbol = j / 2.0 + 1.0
        for idx in range(size):
            if len(symbols) >= k_s:
                break
            symbols.append(net.stored.symbol(gap, idx))
            hops += per_symbol
        j += 1
    report = CollectionReport(
        k_s=k_s, s=len(drained), supersquad_hops=hops, squads_drained=tuple(drained)
    )
    return symbols, report


def simulate_collection_with_doping(
    net: Network,
    collector_relay: int,
    k_s: int,
    rng: np.random.Generator,
    ripple_discipline: str = "fifo",
) -> tuple[DecodeReport, CollectionReport]:
    """Collect upfront symbols, then decode, polling sources on every stall.

    Each doped packet is charged the ring distance from the collector to its
    source relay (uniform sources average about k/4 hops).
    """
    symbols, creport = collect(net, collector_relay, k_s)
    report = decode_with_doping(net.block, symbols, rng, ripple_discipline)
    doped_hops = tuple(
        ring_distance(net.k, collector_relay, src) for src in report.doped_indices
    )
    creport = replace(creport, k_d=report.k_d, doped_hop_costs=doped_hops)
    return report, creport
