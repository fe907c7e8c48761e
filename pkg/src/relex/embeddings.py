"""Embedding enumeration and the greedy least-image embedding.

An embedding of S into T is an injection of universes under which tuple
membership is preserved and reflected.  Reference structures with infinite
intent are consumed through a restriction oracle handing out initial
segments, so they can be defined lazily by generators.
"""

from __future__ import annotations

import itertools
from typing import Callable, Iterator, Optional

from .structures import Injection, Signature, Structure, restrict


class NoEmbeddingError(ValueError):
    """No embedding found within the allowed search bound."""


def _partial_ok(s: Structure, t: Structure, images: list[int]) -> bool:
    """Check the prefix map i -> images[i-1] transfers all tuples through the
    newest point both ways."""
    i = len(images)
    placed = range(1, i + 1)
    for name, arity in s.signature:
        ssets = s.relation_sets()[name]
        tsets = t.relation_sets()[name]
        for tup in itertools.product(placed, repeat=arity):
            if i not in tup:
                continue
            image = tuple(images[c - 1] for c in tup)
            if (tup in ssets) != (image in tsets):
                return False
    return True


def iter_embeddings(s: Structure, t: Structure) -> Iterator[Injection]:
    """Yield embeddings of s into t in lexicographic image order."""
    if s.signature != t.signature or s.n > t.n:
        return
    images: list[int] = []

    def extend() -> Iterator[Injection]:
        i = len(images) + 1
        if i > s.n:
            yield Injection.from_sequence(images)
            return
        for m in range(1, t.n + 1):
            if m in images:
                continue
            images.append(m)
            if _partial_ok(s, t, images):
                yield from extend()
            images.pop()

    yield from extend()


def enumerate_embeddings(s: Structure, t: Structure) -> list[Injection]:
    """All embeddings of s into t, deterministically ordered.

    Exhaustive backtracking; candidate images are tried in increasing
    order, so the output order is the lexicographic order of image
    sequences.
    """
    return list(iter_embeddings(s, t))


def embedding_exists(s: Structure, t: Structure) -> bool:
    return next(iter_embeddings(s, t), None) is not None


def automorphisms(s: Structure) -> list[Injection]:
    """The automorphism group of s (all self-embeddings)."""
    return enumerate_embeddings(s, s)


class LazyStructure:
    """Restriction oracle over a structure defined on all of [1, inf).

    Wraps a builder n -> structure on [1, n].  Memoizes the largest segment
    queried and serves smaller segments by restriction, verifying along the
    way that the builder is consistent (each new segment must extend the
    previous one).
    """

    def __init__(self, signature: Signature, builder: Callable[[int], Structure],
                 name: str | None = None):
        self.signature = signature
        self.name = name
        self._builder = builder
        self._segment: Optional[Structure] = None

    def initial_segment(self, n: int) -> Structure:
        if n < 0:
            raise ValueError("segment size must be >= 0")
        if self._segment is None or self._segment.n < n:
            fresh = self._builder(n)
            if fresh.n != n or fresh.signature != self.signature:
                raise ValueError("oracle builder returned a mismatched structure")
            if self._segment is not None:
                old = restrict(fresh, range(1, self._segment.n + 1))
                if old != self._segment:
                    raise ValueError("oracle builder is inconsistent across segment sizes")
            self._segment = fresh
        return restrict(self._segment, range(1, n + 1))

    def restrict_to(self, subset) -> Structure:
        elems = sorted(set(subset))
        top = elems[-1] if elems else 0
        return restrict(self.initial_segment(top), elems)


def natural_embedding(s: Structure, oracle: LazyStructure, bound: int) -> Injection:
    """Greedy embedding of s into the oracle's structure.

    Image of point i is the least unused m <= bound such that the prefix map
    still embeds s restricted to [1, i].  Deterministic; raises
    NoEmbeddingError when some point has no candidate within the bound.
    """
    if s.signature != oracle.signature:
        raise ValueError("signature mismatch between structure and oracle")
    if bound < s.n:
        raise NoEmbeddingError(f"bound {bound} below structure size {s.n}")
    images: list[int] = []
    for i in range(1, s.n + 1):
        found = None
        for m in range(1, bound + 1):
            if m in images:
                continue
            segment = oracle.initial_segment(max(images + [m]))
            images.append(m)
            if _partial_ok(s, segment, images):
                found = m
                images.pop()
                break
            images.pop()
        if found is None:
            raise NoEmbeddingError(
                f"no embedding of point {i} within bound {bound}")
        images.append(found)
    return Injection.from_sequence(images)
