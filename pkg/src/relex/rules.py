"""Decision functions: per-tuple membership rules driven by keyed randomness.

A decision function answers, for one relation symbol, the question "does
this tuple belong?", reading only exchangeability-safe inputs exposed by a
DecisionContext:

  * the equality pattern of the tuple,
  * xi values keyed by subsets of the tuple's entries (bucketed through a
    fixed partition of [0, 1)),
  * ranks of tuple entries under the keyed random ordering of those entries,
  * in `restriction` mode, the reference structure restricted to the
    tuple's range (as a canonical context key),
  * in `segment` mode, the reference structure's initial segment up to the
    largest tuple entry.

Table rules are data (JSON-loadable); function rules wrap an arbitrary
callable on the context.
"""

from __future__ import annotations

import itertools
import json
from bisect import bisect_right
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional, Sequence, Union

from .randomness import HierarchicalRandomSource, induced_ordering
from .structures import (Signature, Structure, restrict, serialize,
                         _relabel_by_permutation)

CONTEXT_MODES = ("none", "restriction", "segment")


def context_key(structure: Structure, tup: tuple[int, ...]) -> str:
    """Canonical key of a structure with a distinguished tuple over it.

    Minimizes (serialized relabeling, relabeled tuple) over all relabelings,
    so two (structure, tuple) pairs get equal keys exactly when some
    isomorphism of the structures carries one tuple to the other.
    """
    if any(c < 1 or c > structure.n for c in tup):
        raise ValueError("tuple entries must lie in the structure's universe")
    best: Optional[tuple[str, tuple[int, ...]]] = None
    for perm in itertools.permutations(range(1, structure.n + 1)):
        relabeled = _relabel_by_permutation(structure, perm)
        mapped = tuple(perm[c - 1] for c in tup)
        cand = (serialize(relabeled), mapped)
        if best is None or cand < best:
            best = cand
    return f"{best[0]}|{json.dumps(list(best[1]))}"


def tuple_pattern(tup: Sequence[int]) -> tuple[int, ...]:
    """Equality pattern: dense ids in order of first occurrence, from 0."""
    seen: dict[int, int] = {}
    out = []
    for c in tup:
        if c not in seen:
            seen[c] = len(seen)
        out.append(seen[c])
    return tuple(out)


class DecisionContext:
    """Lazy view of everything a decision function may read for one tuple."""

    def __init__(self, source: HierarchicalRandomSource, relation: str,
                 tup: tuple[int, ...], partition: tuple[float, ...] = (),
                 context_mode: str = "none",
                 restriction_provider: Optional[Callable[[tuple[int, ...]], Structure]] = None,
                 segment_provider: Optional[Callable[[int], Structure]] = None):
        self.source = source
        self.relation = relation
        self.tuple = tuple(tup)
        self.partition = tuple(partition)
        self.context_mode = context_mode
        self._restriction_provider = restriction_provider
        self._segment_provider = segment_provider
        self._xi_cache: dict[tuple[int, ...], float] = {}
        self._rank_cache: dict[tuple[int, ...], tuple[int, ...]] = {}
        self._context_key: Optional[str] = None
        self._restriction: Optional[Structure] = None
        self._segment: Optional[Structure] = None

    # -- coordinate selection -------------------------------------------------

    def elements(self, positions: Optional[Sequence[int]] = None) -> tuple[int, ...]:
        """Tuple entries at 1-based positions (all positions by default)."""
        if positions is None:
            return self.tuple
        for p in positions:
            if p < 1 or p > len(self.tuple):
                raise ValueError(f"position {p} out of range for arity {len(self.tuple)}")
        return tuple(self.tuple[p - 1] for p in positions)

    def subset(self, positions: Optional[Sequence[int]] = None) -> tuple[int, ...]:
        return tuple(sorted(set(self.elements(positions))))

    # -- randomness channels --------------------------------------------------

    def pattern(self) -> tuple[int, ...]:
        return tuple_pattern(self.tuple)

    def xi(self, positions: Optional[Sequence[int]] = None) -> float:
        key = self.subset(positions)
        if key not in self._xi_cache:
            self._xi_cache[key] = self.source.xi(key)
        return self._xi_cache[key]

    def interval(self, positions: Optional[Sequence[int]] = None) -> int:
        """Index of the partition cell containing xi(positions)."""
        return bisect_right(self.partition, self.xi(positions))

    def ordering_ranks(self, positions: Optional[Sequence[int]] = None) -> tuple[int, ...]:
        """Ranks of the selected entries under the keyed ordering of their set."""
        key = tuple(positions) if positions is not None else tuple(range(1, len(self.tuple) + 1))
        if key not in self._rank_cache:
            subset = self.subset(positions)
            order = self.source.ordering(subset)
            self._rank_cache[key] = induced_ordering(self.elements(positions), order).ranks
        return self._rank_cache[key]

    # -- reference-structure channels ------------------------------------------

    def restriction(self) -> Structure:
        """Reference structure restricted to the tuple's range, on [1, k]."""
        if self._restriction is None:
            if self._restriction_provider is None:
                raise ValueError("no reference structure available in this context")
            self._restriction = self._restriction_provider(self.subset())
        return self._restriction

    def segment(self) -> Structure:
        """Reference structure's initial segment on [1, max entry]."""
        if self._segment is None:
            if self._segment_provider is None:
                raise ValueError("no segment provider available in this context")
            self._segment = self._segment_provider(max(self.tuple))
        return self._segment

    def context_key(self) -> str:
        """Canonical key of the local reference view together with the tuple.

        In `restriction` mode the view is the reference restricted to the
        tuple's range; in `segment` mode it is the segment restricted the
        same way (so keys stay small and isomorphism-invariant).
        """
        if self._context_key is None:
            if self.context_mode == "none":
                raise ValueError("context_key is unavailable in context mode 'none'")
            subset = self.subset()
            if self.context_mode == "restriction":
                local = self.restriction()
            elif self.context_mode == "segment":
                local = restrict(self.segment(), subset)
            else:
                raise ValueError(f"unknown context mode {self.context_mode!r}")
            index = {c: k for k, c in enumerate(subset, start=1)}
            mapped = tuple(index[c] for c in self.tuple)
            self._context_key = context_key(local, mapped)
        return self._context_key


class DecisionFunction:
    """One relation symbol's membership rule."""

    def __init__(self, relation: str, arity: int, context_mode: str = "none",
                 partition: Sequence[float] = ()):
        if arity < 1:
            raise ValueError("arity must be >= 1")
        if context_mode not in CONTEXT_MODES:
            raise ValueError(f"context mode must be one of {CONTEXT_MODES}")
        breakpoints = tuple(float(b) for b in partition)
        if any(not (0.0 < b < 1.0) for b in breakpoints):
            raise ValueError("partition breakpoints must lie strictly inside (0, 1)")
        if any(b1 >= b2 for b1, b2 in zip(breakpoints, breakpoints[1:])):
            raise ValueError("partition breakpoints must increase strictly")
        self.relation = relation
        self.arity = arity
        self.context_mode = context_mode
        self.partition = breakpoints

    @property
    def num_intervals(self) -> int:
        return len(self.partition) + 1

    def interval_of(self, x: float) -> int:
        return bisect_right(self.partition, x)

    def decide(self, ctx: DecisionContext) -> bool:
        raise NotImplementedError


def _normalize_positions(key: Union[str, Sequence[int]], arity: int) -> tuple[int, ...]:
    if isinstance(key, str):
        try:
            parsed = json.loads(key)
        except json.JSONDecodeError as exc:
            raise ValueError(f"bad positions key {key!r}") from exc
    else:
        parsed = list(key)
    if not isinstance(parsed, list) or not all(isinstance(p, int) for p in parsed):
        raise ValueError(f"positions must be a list of integers, got {key!r}")
    positions = tuple(parsed)
    for p in positions:
        if p < 1 or p > arity:
            raise ValueError(f"position {p} out of range for arity {arity}")
    return positions


@dataclass(frozen=True)
class TableEntry:
    """One row of a table rule; all stated conditions must hold to match."""
    bit: bool
    pattern: Optional[tuple[int, ...]] = None
    context_key: Optional[str] = None
    thresholds: Optional[tuple[tuple[tuple[int, ...], frozenset], ...]] = None
    orderings: Optional[tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]] = None

    def matches(self, ctx: DecisionContext) -> bool:
        if self.pattern is not None and ctx.pattern() != self.pattern:
            return False
        if self.context_key is not None and ctx.context_key() != self.context_key:
            return False
        if self.thresholds is not None:
            for positions, allowed in self.thresholds:
                if ctx.interval(positions) not in allowed:
                    return False
        if self.orderings is not None:
            for positions, ranks in self.orderings:
                if ctx.ordering_ranks(positions) != ranks:
                    return False
        return True

    def to_json(self) -> dict:
        out: dict = {"bit": int(self.bit)}
        if self.pattern is not None:
            out["pattern"] = list(self.pattern)
        if self.context_key is not None:
            out["context_key"] = self.context_key
        if self.thresholds is not None:
            out["thresholds"] = {json.dumps(list(positions)): sorted(allowed)
                                 for positions, allowed in self.thresholds}
        if self.orderings is not None:
            out["orderings"] = {json.dumps(list(positions)): list(ranks)
                                for positions, ranks in self.orderings}
        return out


class TableDecisionFunction(DecisionFunction):
    """Data-driven rule: first matching entry wins, else the default bit."""

    def __init__(self, relation: str, arity: int, entries: Sequence[TableEntry],
                 default: bool = False, context_mode: str = "none",
                 partition: Sequence[float] = ()):
        super().__init__(relation, arity, context_mode, partition)
        for entry in entries:
            self._validate_entry(entry)
        self.entries = tuple(entries)
        self.default = bool(default)

    def _validate_entry(self, entry: TableEntry) -> None:
        if entry.pattern is not None:
            if len(entry.pattern) != self.arity:
                raise ValueError("pattern length must equal the arity")
            expected = tuple_pattern(entry.pattern)
            if tuple(entry.pattern) != expected:
                raise ValueError(
                    f"pattern {entry.pattern} is not in dense first-occurrence form")
        if entry.context_key is not None and self.context_mode == "none":
            raise ValueError("context_key conditions need a context mode")
        if entry.thresholds is not None:
            for positions, allowed in entry.thresholds:
                _normalize_positions(list(positions), self.arity)
                for idx in allowed:
                    if not (0 <= idx < self.num_intervals):
                        raise ValueError(f"interval index {idx} out of range")
        if entry.orderings is not None:
            for positions, _ranks in entry.orderings:
                _normalize_positions(list(positions), self.arity)

    def decide(self, ctx: DecisionContext) -> bool:
        for entry in self.entries:
            if entry.matches(ctx):
                return entry.bit
        return self.default

    def to_json(self) -> dict:
        return {
            "relation": {"name": self.relation, "arity": self.arity},
            "context": self.context_mode,
            "partition": list(self.partition),
            "default": int(self.default),
            "entries": [entry.to_json() for entry in self.entries],
        }


class FunctionDecisionFunction(DecisionFunction):
    """Rule computed by an arbitrary callable on the context."""

    def __init__(self, relation: str, arity: int,
                 fn: Callable[[DecisionContext], bool],
                 context_mode: str = "none", partition: Sequence[float] = ()):
        super().__init__(relation, arity, context_mode, partition)
        self._fn = fn

    def decide(self, ctx: DecisionContext) -> bool:
        return bool(self._fn(ctx))


# --- rule sets ----------------------------------------------------------------

RuleSet = dict  # name -> DecisionFunction


def normalize_rules(rules: Union[DecisionFunction, Mapping[str, DecisionFunction],
                                 Iterable[DecisionFunction]]) -> dict[str, DecisionFunction]:
    """Accept one rule, a mapping, or an iterable; key by relation name."""
    if isinstance(rules, DecisionFunction):
        return {rules.relation: rules}
    if isinstance(rules, Mapping):
        out = dict(rules)
        for name, df in out.items():
            if df.relation != name:
                raise ValueError(f"rule for {df.relation!r} keyed as {name!r}")
        return out
    out = {}
    for df in rules:
        if df.relation in out:
            raise ValueError(f"duplicate rule for relation {df.relation!r}")
        out[df.relation] = df
    return out


def rules_signature(rules: Mapping[str, DecisionFunction]) -> Signature:
    return Signature(tuple((name, rules[name].arity) for name in sorted(rules)))


def _entry_from_json(obj: dict, arity: int) -> TableEntry:
    unknown = set(obj) - {"pattern", "context_key", "thresholds", "orderings", "bit"}
    if unknown:
        raise ValueError(f"unknown entry fields: {sorted(unknown)}")
    if "bit" not in obj:
        raise ValueError("entry is missing 'bit'")
    pattern = tuple(obj["pattern"]) if "pattern" in obj else None
    ck = obj.get("context_key")
    thresholds = None
    if "thresholds" in obj:
        items = []
        for key, allowed in obj["thresholds"].items():
            positions = _normalize_positions(key, arity)
            if isinstance(allowed, int):
                allowed = [allowed]
            items.append((positions, frozenset(int(a) for a in allowed)))
        thresholds = tuple(sorted(items))
    orderings = None
    if "orderings" in obj:
        items = []
        for key, ranks in obj["orderings"].items():
            positions = _normalize_positions(key, arity)
            items.append((positions, tuple(int(r) for r in ranks)))
        orderings = tuple(sorted(items))
    return TableEntry(bit=bool(obj["bit"]), pattern=pattern, context_key=ck,
                      thresholds=thresholds, orderings=orderings)


def _rule_from_json(obj: dict) -> TableDecisionFunction:
    unknown = set(obj) - {"relation", "context", "partition", "default", "entries"}
    if unknown:
        raise ValueError(f"unknown rule fields: {sorted(unknown)}")
    rel = obj.get("relation")
    if not isinstance(rel, dict) or "name" not in rel or "arity" not in rel:
        raise ValueError("rule needs relation: {name, arity}")
    name, arity = rel["name"], int(rel["arity"])
    entries = [_entry_from_json(e, arity) for e in obj.get("entries", [])]
    return TableDecisionFunction(
        relation=name, arity=arity, entries=entries,
        default=bool(obj.get("default", 0)),
        context_mode=obj.get("context", "none"),
        partition=tuple(obj.get("partition", ())))


def rules_from_json(obj: Union[dict, list]) -> dict[str, DecisionFunction]:
    """Parse a rule-set JSON object (one rule, a list, or {"rules": [...]})."""
    if isinstance(obj, dict) and "rules" in obj:
        obj = obj["rules"]
    if isinstance(obj, dict):
        obj = [obj]
    return normalize_rules([_rule_from_json(item) for item in obj])


def load_rules(path: str) -> dict[str, DecisionFunction]:
    with open(path, "r", encoding="utf-8") as fh:
        return rules_from_json(json.load(fh))
