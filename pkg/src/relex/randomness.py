"""Subset-keyed hierarchical randomness.

One logical random family per seed: a uniform value xi_s in [0,1) and a
uniform total order on s, for every finite subset s of the positive
integers.  Values are produced by a keyed pseudorandom function of
(seed, tag, sorted subset), so any two queries for the same subset agree
and queries for different subsets are independent for all practical
purposes.  Because nothing is consumed statefully, samplers built on this
source are exactly projective: restricting a size-n sample to [1, m]
reproduces the size-m sample bit for bit.
"""

from __future__ import annotations

import hashlib
from typing import Iterable, Sequence


class ArityExceededError(ValueError):
    """Queried subset is larger than the declared max arity."""


def _encode_subset(subset: tuple[int, ...]) -> bytes:
    return ",".join(str(x) for x in subset).encode("ascii")


class _KeyedStream:
    """Counter-based byte stream keyed by (seed, tag, subset)."""

    def __init__(self, seed_key: bytes, tag: bytes, subset: tuple[int, ...]):
        self._key = seed_key
        self._base = tag + b"|" + _encode_subset(subset) + b"#"
        self._counter = 0
        self._buffer = b""

    def _refill(self) -> None:
        block = hashlib.blake2b(self._base + str(self._counter).encode("ascii"),
                                key=self._key, digest_size=32).digest()
        self._counter += 1
        self._buffer += block

    def take(self, nbytes: int) -> bytes:
        while len(self._buffer) < nbytes:
            self._refill()
        out, self._buffer = self._buffer[:nbytes], self._buffer[nbytes:]
        return out

    def bits(self, k: int) -> int:
        nbytes = (k + 7) // 8
        value = int.from_bytes(self.take(nbytes), "big")
        return value >> (nbytes * 8 - k)

    def randbelow(self, n: int) -> int:
        if n <= 0:
            raise ValueError("randbelow needs n >= 1")
        k = (n - 1).bit_length() or 1
        while True:
            v = self.bits(k)
            if v < n:
                return v


class HierarchicalRandomSource:
    """Deterministic per-seed family of per-subset uniforms and orders."""

    def __init__(self, seed: int, max_arity: int | None = None):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.max_arity = max_arity
        self._key = self.seed.to_bytes(8, "big")

    def _check(self, subset: Sequence[int]) -> tuple[int, ...]:
        s = tuple(sorted(set(int(x) for x in subset)))
        if any(x < 1 for x in s):
            raise ValueError("subset elements must be positive integers")
        if self.max_arity is not None and len(s) > self.max_arity and len(s) > 0:
            raise ArityExceededError(
                f"subset size {len(s)} exceeds max arity {self.max_arity}")
        return s

    def xi(self, subset: Iterable[int] = ()) -> float:
        """Uniform [0,1) value attached to the subset; 53 random bits.

        The empty subset is always allowed and acts as the global mixing
        variable shared by the whole sample.
        """
        s = self._check(tuple(subset))
        stream = _KeyedStream(self._key, b"xi", s)
        return stream.bits(53) / (1 << 53)

    def ordering(self, subset: Iterable[int]) -> tuple[int, ...]:
        """Uniform random total order on the subset.

        Returned as the subset's elements listed smallest-first in the
        drawn order; all |s|! orders are equally likely across seeds.
        """
        s = self._check(tuple(subset))
        stream = _KeyedStream(self._key, b"ord", s)
        items = list(s)
        for i in range(len(items) - 1, 0, -1):
            j = stream.randbelow(i + 1)
            items[i], items[j] = items[j], items[i]
        return tuple(items)


class InducedOrdering:
    """Strict partial order on the positions of a tuple, induced by a total
    order on its range.

    Position i precedes position j exactly when the i-th entry precedes the
    j-th entry; positions holding equal entries are incomparable, so a
    constant tuple induces the empty order.
    """

    __slots__ = ("_ranks",)

    def __init__(self, ranks: tuple[int, ...]):
        self._ranks = ranks

    @property
    def ranks(self) -> tuple[int, ...]:
        """Dense per-position ranks; equal rank means incomparable."""
        return self._ranks

    def precedes(self, i: int, j: int) -> bool:
        """1-based positions."""
        return self._ranks[i - 1] < self._ranks[j - 1]

    def pairs(self) -> frozenset[tuple[int, int]]:
        k = len(self._ranks)
        return frozenset((i, j) for i in range(1, k + 1) for j in range(1, k + 1)
                         if self.precedes(i, j))

    def __len__(self) -> int:
        return len(self._ranks)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, InducedOrdering) and self._ranks == other._ranks

    def __hash__(self) -> int:
        return hash(self._ranks)

    def __repr__(self) -> str:
        return f"InducedOrdering(ranks={self._ranks})"


def induced_ordering(values: Sequence[int], order: Sequence[int]) -> InducedOrdering:
    """Order the positions of `values` by where their entries sit in `order`.

    `order` must be a total order of exactly the distinct entries of
    `values` (as produced by HierarchicalRandomSource.ordering).
    """
    distinct = set(values)
    if set(order) != distinct or len(order) != len(distinct):
        raise ValueError("order must cover exactly the distinct entries of the tuple")
    position = {v: r for r, v in enumerate(order)}
    raw = [position[v] for v in values]
    dense = {r: i for i, r in enumerate(sorted(set(raw)))}
    return InducedOrdering(tuple(dense[r] for r in raw))


def permutation_rank(perm: Sequence[int]) -> int:
    """Lexicographic rank of a permutation of [1, k] among all k! orders."""
    k = len(perm)
    if sorted(perm) != list(range(1, k + 1)):
        raise ValueError("not a permutation of [1, k]")
    rank = 0
    remaining = list(range(1, k + 1))
    for i, v in enumerate(perm):
        idx = remaining.index(v)
        rank = rank * (k - i) + idx
        remaining.pop(idx)
    return rank


class SeedStream:
    """Reproducible stream of 64-bit seeds derived from one meta-seed."""

    def __init__(self, meta_seed: int):
        self.meta_seed = int(meta_seed) & 0xFFFFFFFFFFFFFFFF
        self._key = self.meta_seed.to_bytes(8, "big")

    def __getitem__(self, index: int) -> int:
        digest = hashlib.blake2b(b"seed|" + str(int(index)).encode("ascii"),
                                 key=self._key, digest_size=8).digest()
        return int.from_bytes(digest, "big")

    def take(self, count: int, offset: int = 0) -> list[int]:
        return [self[offset + i] for i in range(count)]
