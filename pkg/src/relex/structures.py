"""Finite relational structures over explicit signatures.

Universes are always initial segments [1, n] of the positive integers.
Structures on other finite label sets are handled by relabeling through an
injection, which re-indexes the domain to [1, |domain|] in increasing order
and reports the index map alongside the result.

All values here are immutable and all operations are pure.
"""

from __future__ import annotations

import itertools
import json
from functools import lru_cache
from typing import Iterable, Iterator, Optional


class Signature:
    """Ordered list of relation symbols with arities.

    Names must be unique, arities at least 1.  The empty signature is
    allowed (structures then carry a bare universe).
    """

    __slots__ = ("_symbols", "_arity_by_name")

    def __init__(self, symbols: Iterable[tuple[str, int]]):
        syms = tuple((str(name), int(arity)) for name, arity in symbols)
        seen = set()
        for name, arity in syms:
            if not name:
                raise ValueError("relation name must be nonempty")
            if name in seen:
                raise ValueError(f"duplicate relation name {name!r}")
            if arity < 1:
                raise ValueError(f"arity of {name!r} must be >= 1, got {arity}")
            seen.add(name)
        self._symbols = syms
        self._arity_by_name = {name: arity for name, arity in syms}

    @property
    def symbols(self) -> tuple[tuple[str, int], ...]:
        return self._symbols

    def arity(self, name: str) -> int:
        try:
            return self._arity_by_name[name]
        except KeyError:
            raise KeyError(f"unknown relation {name!r}") from None

    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self._symbols)

    def max_arity(self) -> int:
        return max((a for _, a in self._symbols), default=0)

    def __contains__(self, name: object) -> bool:
        return name in self._arity_by_name

    def __len__(self) -> int:
        return len(self._symbols)

    def __iter__(self) -> Iterator[tuple[str, int]]:
        return iter(self._symbols)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Signature) and self._symbols == other._symbols

    def __hash__(self) -> int:
        return hash(self._symbols)

    def __repr__(self) -> str:
        inner = ", ".join(f"{n}/{a}" for n, a in self._symbols)
        return f"Signature({inner})"


EMPTY_SIGNATURE = Signature(())
GRAPH_SIGNATURE = Signature((("E", 2),))


class Structure:
    """Finite relational structure with universe [1, n].

    Relation contents are sets of tuples, stored sorted for deterministic
    serialization.  Instances are immutable and hashable; equality is
    literal (same signature, same universe size, same tuple sets).
    """

    __slots__ = ("_signature", "_n", "_relations", "_members", "_key")

    def __init__(self, signature: Signature, n: int,
                 relations: dict[str, Iterable[tuple[int, ...]]] | None = None):
        if n < 0:
            raise ValueError(f"universe size must be >= 0, got {n}")
        relations = dict(relations or {})
        for name in relations:
            if name not in signature:
                raise ValueError(f"relation {name!r} not in signature")
        members: dict[str, frozenset[tuple[int, ...]]] = {}
        stored: dict[str, tuple[tuple[int, ...], ...]] = {}
        for name, arity in signature:
            tups = frozenset(tuple(int(c) for c in t) for t in relations.get(name, ()))
            for t in tups:
                if len(t) != arity:
                    raise ValueError(f"tuple {t} has wrong arity for {name!r}/{arity}")
                if any(c < 1 or c > n for c in t):
                    raise ValueError(f"tuple {t} out of universe [1,{n}]")
            members[name] = tups
            stored[name] = tuple(sorted(tups))
        self._signature = signature
        self._n = n
        self._relations = stored
        self._members = members
        self._key: Optional[str] = None

    @property
    def signature(self) -> Signature:
        return self._signature

    @property
    def n(self) -> int:
        return self._n

    def universe(self) -> range:
        return range(1, self._n + 1)

    def tuples(self, name: str) -> tuple[tuple[int, ...], ...]:
        """Contents of one relation, sorted."""
        return self._relations[name]

    def has(self, name: str, tup: tuple[int, ...]) -> bool:
        return tup in self._members[name]

    def relation_sets(self) -> dict[str, frozenset[tuple[int, ...]]]:
        return dict(self._members)

    def key(self) -> str:
        """Deterministic compact serialization, usable as a dict key."""
        if self._key is None:
            self._key = serialize(self)
        return self._key

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, Structure)
                and self._signature == other._signature
                and self._n == other._n
                and self._relations == other._relations)

    def __hash__(self) -> int:
        return hash((self._signature, self._n,
                     tuple(self._relations[name] for name in self._signature.names())))

    def __repr__(self) -> str:
        parts = ", ".join(f"{name}={list(self._relations[name])}"
                          for name in self._signature.names())
        return f"Structure(n={self._n}, {parts})" if parts else f"Structure(n={self._n})"


class Injection:
    """Injective map between finite sets of positive integers."""

    __slots__ = ("_mapping", "_domain")

    def __init__(self, mapping: dict[int, int]):
        m = {int(k): int(v) for k, v in mapping.items()}
        if any(k < 1 for k in m) or any(v < 1 for v in m.values()):
            raise ValueError("injection endpoints must be positive integers")
        if len(set(m.values())) != len(m):
            raise ValueError("mapping is not injective")
        self._mapping = m
        self._domain = tuple(sorted(m))

    @classmethod
    def identity(cls, elements: Iterable[int]) -> "Injection":
        return cls({e: e for e in elements})

    @classmethod
    def from_sequence(cls, images: Iterable[int]) -> "Injection":
        """Injection with domain [1, k] sending i to the i-th image."""
        return cls({i: v for i, v in enumerate(images, start=1)})

    @property
    def domain(self) -> tuple[int, ...]:
        return self._domain

    def image(self) -> frozenset[int]:
        return frozenset(self._mapping.values())

    def image_sequence(self) -> tuple[int, ...]:
        """Images listed in increasing domain order."""
        return tuple(self._mapping[d] for d in self._domain)

    def __call__(self, x: int) -> int:
        return self._mapping[x]

    def apply(self, tup: tuple[int, ...]) -> tuple[int, ...]:
        return tuple(self._mapping[c] for c in tup)

    def compose(self, inner: "Injection") -> "Injection":
        """self after inner: x -> self(inner(x))."""
        return Injection({x: self._mapping[inner(x)] for x in inner.domain})

    def inverse(self) -> "Injection":
        return Injection({v: k for k, v in self._mapping.items()})

    def items(self) -> list[tuple[int, int]]:
        return [(d, self._mapping[d]) for d in self._domain]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Injection) and self._mapping == other._mapping

    def __hash__(self) -> int:
        return hash(tuple(self.items()))

    def __len__(self) -> int:
        return len(self._mapping)

    def __repr__(self) -> str:
        inner = ", ".join(f"{k}->{v}" for k, v in self.items())
        return f"Injection({inner})"


def relabel(structure: Structure, phi: Injection) -> tuple[Structure, Injection]:
    """Pull a structure back along an injection.

    A tuple is in relation R of the result exactly when its phi-image is in
    R of the input.  The result's universe is [1, |domain(phi)|] with the
    domain re-indexed in increasing order; the returned index map sends each
    new index to the domain element it stands for.
    """
    if any(v < 1 or v > structure.n for v in phi.image()):
        raise ValueError("injection image must lie inside the structure's universe")
    domain = phi.domain
    k = len(domain)
    index_map = Injection.from_sequence(domain)
    relations: dict[str, list[tuple[int, ...]]] = {}
    for name, arity in structure.signature:
        source = structure.relation_sets()[name]
        out = []
        for tup in itertools.product(range(1, k + 1), repeat=arity):
            image = tuple(phi(index_map(c)) for c in tup)
            if image in source:
                out.append(tup)
        relations[name] = out
    return Structure(structure.signature, k, relations), index_map


def restrict(structure: Structure, subset: Iterable[int]) -> Structure:
    """Restriction to a subset of the universe, re-indexed to [1, |subset|]."""
    elems = sorted(set(int(x) for x in subset))
    if any(x < 1 or x > structure.n for x in elems):
        raise ValueError("subset must lie inside the universe")
    result, _ = relabel(structure, Injection.identity(elems))
    return result


def _profile(structure: Structure, x: int) -> tuple:
    """Occurrence counts of x per relation and position, an isomorphism
    invariant used to prune the matching search."""
    prof = []
    for name, arity in structure.signature:
        counts = [0] * arity
        diag = 0
        for tup in structure.tuples(name):
            for pos, c in enumerate(tup):
                if c == x:
                    counts[pos] += 1
            if all(c == x for c in tup):
                diag += 1
        prof.append((tuple(counts), diag))
    return tuple(prof)


def _extension_ok(a: Structure, b: Structure, assign: dict[int, int], new: int) -> bool:
    """Check all tuples through `new` among assigned elements transfer both ways."""
    mapped = assign
    placed = list(mapped)
    for name, arity in a.signature:
        asets = a.relation_sets()[name]
        bsets = b.relation_sets()[name]
        for tup in itertools.product(placed, repeat=arity):
            if new not in tup:
                continue
            image = tuple(mapped[c] for c in tup)
            if (tup in asets) != (image in bsets):
                return False
    return True


def is_isomorphic(a: Structure, b: Structure) -> Optional[Injection]:
    """Search for an isomorphism; returns a witness bijection or None.

    Backtracking over partial bijections with per-element profile pruning.
    """
    if a.signature != b.signature or a.n != b.n:
        return None
    for name in a.signature.names():
        if len(a.tuples(name)) != len(b.tuples(name)):
            return None
    n = a.n
    prof_a = {x: _profile(a, x) for x in a.universe()}
    prof_b = {y: _profile(b, y) for y in b.universe()}
    if sorted(prof_a.values()) != sorted(prof_b.values()):
        return None

    assign: dict[int, int] = {}
    used: set[int] = set()

    def extend(x: int) -> Optional[Injection]:
        if x > n:
            return Injection(dict(assign))
        for y in range(1, n + 1):
            if y in used or prof_a[x] != prof_b[y]:
                continue
            assign[x] = y
            used.add(y)
            if _extension_ok(a, b, assign, x):
                found = extend(x + 1)
                if found is not None:
                    return found
            del assign[x]
            used.discard(y)
        return None

    return extend(1)


def _relabel_by_permutation(structure: Structure, perm: tuple[int, ...]) -> Structure:
    """Relabel so that old element i becomes perm[i-1]."""
    relations = {}
    for name in structure.signature.names():
        relations[name] = [tuple(perm[c - 1] for c in tup) for tup in structure.tuples(name)]
    return Structure(structure.signature, structure.n, relations)


@lru_cache(maxsize=65536)
def _canonical_cached(signature: Signature, n: int,
                      rels: tuple[tuple[tuple[int, ...], ...], ...]) -> Structure:
    base = Structure(signature, n,
                     {name: rels[i] for i, (name, _) in enumerate(signature)})
    best = None
    best_serial = None
    for perm in itertools.permutations(range(1, n + 1)):
        cand = _relabel_by_permutation(base, perm)
        s = cand.key()
        if best_serial is None or s < best_serial:
            best_serial = s
            best = cand
    return best if best is not None else base


def canonical_form(structure: Structure) -> Structure:
    """Canonical representative of the isomorphism class.

    Minimizes the serialized form over all relabelings of the universe, so
    two structures are isomorphic exactly when their canonical forms are
    equal.  Cost grows as n!, intended for n <= 8.
    """
    rels = tuple(structure.tuples(name) for name in structure.signature.names())
    return _canonical_cached(structure.signature, structure.n, rels)


def serialize(structure: Structure) -> str:
    """Canonical JSON text: sorted keys, sorted tuples, no whitespace."""
    doc = {
        "universe": structure.n,
        "signature": [{"name": name, "arity": arity} for name, arity in structure.signature],
        "relations": {name: [list(t) for t in structure.tuples(name)]
                      for name in structure.signature.names()},
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def deserialize(text: str) -> Structure:
    """Inverse of serialize; round-trips bit-exactly."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed structure JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValueError("structure JSON must be an object")
    for field in ("universe", "signature", "relations"):
        if field not in doc:
            raise ValueError(f"structure JSON missing {field!r}")
    signature = Signature((entry["name"], entry["arity"]) for entry in doc["signature"])
    relations = {name: [tuple(t) for t in tups] for name, tups in doc["relations"].items()}
    return Structure(signature, doc["universe"], relations)


def load_structure(path: str) -> Structure:
    with open(path, "r", encoding="utf-8") as fh:
        return deserialize(fh.read())


def dump_structure(structure: Structure, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize(structure) + "\n")
