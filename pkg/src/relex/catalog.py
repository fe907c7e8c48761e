"""Named reference structures, ready-made rule sets, and checkable claims.

Each entry pairs a concretely constructed reference structure (as a lazy
restriction oracle) with a sampler whose output is tied to it, plus a
verification routine for the structural or statistical claim the pair is
known to satisfy.  The four named examples are addressable through
`paper_example` and the `verify-paper-examples` CLI subcommand.
"""

from __future__ import annotations

import itertools
from typing import Optional

from .amalgamation import builtin_class
from .embeddings import LazyStructure
from .randomness import HierarchicalRandomSource, SeedStream
from .rules import (FunctionDecisionFunction, TableDecisionFunction,
                    TableEntry, context_key)
from .samplers import (FramewiseSampler, sample_framewise,
                       sample_m_exchangeable, sample_maxseg_exchangeable)
from .structures import Signature, Structure

PAPER_EXAMPLE_NAMES = ("weak-rep", "tdc-evens", "parity-overlay", "strong-rep")

UNARY_SIG = Signature((("P", 1),))
EDGE_SIG = Signature((("E", 2),))
TRIPLE_SIG = Signature((("R", 3),))
OVERLAY_SIG = Signature((("E", 2), ("R", 3)))
SAMPLE_EDGE_SIG = Signature((("S", 2),))


# --- reference oracles ----------------------------------------------------------

def evens_oracle() -> LazyStructure:
    """Unary P holding exactly the even numbers."""
    def builder(m: int) -> Structure:
        return Structure(UNARY_SIG, m, {"P": [(i,) for i in range(2, m + 1, 2)]})
    return LazyStructure(UNARY_SIG, builder, name="evens")


def _block_of(i: int, x: int) -> int:
    """Block of x in the three-way split relative to i: {i}, evens, odds."""
    if x == i:
        return 0
    return 1 if x % 2 == 0 else 2


def same_class_triple_oracle() -> LazyStructure:
    """Ternary R(i, j, k) iff j and k fall in the same block relative to i.

    Relative to each i the base set splits into three blocks: {i}, the
    other evens, and the other odds.
    """
    def builder(m: int) -> Structure:
        tuples = [(i, j, k)
                  for i in range(1, m + 1)
                  for j in range(1, m + 1)
                  for k in range(1, m + 1)
                  if _block_of(i, j) == _block_of(i, k)]
        return Structure(TRIPLE_SIG, m, {"R": tuples})
    return LazyStructure(TRIPLE_SIG, builder, name="same-class-triple")


def odd_target_oracle() -> LazyStructure:
    """Binary E(i, j) iff j is odd and j != i."""
    def builder(m: int) -> Structure:
        tuples = [(i, j) for i in range(1, m + 1) for j in range(1, m + 1, 2) if j != i]
        return Structure(EDGE_SIG, m, {"E": tuples})
    return LazyStructure(EDGE_SIG, builder, name="odd-target")


def parity_overlay_oracle(src: HierarchicalRandomSource) -> LazyStructure:
    """A frame-wise random graph E together with its odd-pair-count triples R.

    R(x, y, z) holds for distinct x, y, z exactly when an odd number of the
    three pairs within {x, y, z} are E-edges.  Both parts are driven by the
    given source, so the oracle is a pure function of the seed (and
    consistent across segment sizes, since the graph sampler is projective).
    """
    graphs = builtin_class("graphs")

    def builder(m: int) -> Structure:
        graph = sample_framewise(graphs, m, src)
        edges = graph.tuples("E")
        edge_set = set(edges)
        triples = []
        for x, y, z in itertools.combinations(range(1, m + 1), 3):
            count = sum(1 for pair in ((x, y), (x, z), (y, z)) if pair in edge_set)
            if count % 2 == 1:
                triples.extend(itertools.permutations((x, y, z)))
        return Structure(OVERLAY_SIG, m, {"E": edges, "R": triples})
    return LazyStructure(OVERLAY_SIG, builder, name="parity-overlay")


# --- rule sets ------------------------------------------------------------------

def random_graph_rules() -> dict:
    """Symmetric edge iff xi_{i,j} falls below 1/2; no loops."""
    df = TableDecisionFunction(
        "E", 2,
        entries=(TableEntry(bit=True, pattern=(0, 1),
                            thresholds=(((1, 2), frozenset({0})),)),),
        default=False, context_mode="none", partition=(0.5,))
    return {"E": df}


def tournament_rules() -> dict:
    """Arc (i, j) iff i precedes j in the keyed ordering of {i, j}."""
    df = TableDecisionFunction(
        "E", 2,
        entries=(TableEntry(bit=True, pattern=(0, 1),
                            orderings=(((1, 2), (0, 1)),)),),
        default=False, context_mode="none")
    return {"E": df}


def complete_graph_rules() -> dict:
    """Every off-diagonal pair is an edge."""
    df = TableDecisionFunction(
        "E", 2,
        entries=(TableEntry(bit=True, pattern=(0, 1)),),
        default=False, context_mode="none")
    return {"E": df}


def _cells_below(partition: tuple[float, ...], theta: float) -> frozenset:
    """Partition cells lying entirely below theta (theta must be a breakpoint)."""
    rights = list(partition) + [1.0]
    return frozenset(i for i, right in enumerate(rights) if right <= theta)


def _unary_context_keys() -> tuple[str, str]:
    with_p = Structure(UNARY_SIG, 1, {"P": [(1,)]})
    without_p = Structure(UNARY_SIG, 1)
    return context_key(with_p, (1,)), context_key(without_p, (1,))


def two_coin_rules(theta0: float = 0.3, theta1: float = 0.7) -> dict:
    """P(i) with probability theta1 when the reference holds P at i, else theta0."""
    partition = tuple(sorted({theta0, theta1}))
    key_in, key_out = _unary_context_keys()
    entries = (
        TableEntry(bit=True, context_key=key_in,
                   thresholds=(((1,), _cells_below(partition, theta1)),)),
        TableEntry(bit=True, context_key=key_out,
                   thresholds=(((1,), _cells_below(partition, theta0)),)),
    )
    df = TableDecisionFunction("P", 1, entries=entries, default=False,
                               context_mode="restriction", partition=partition)
    return {"P": df}


def mixed_two_coin_rules(components: tuple[tuple[float, float], ...] = ((0.1, 0.2), (0.8, 0.9)),
                         split: float = 0.5) -> dict:
    """Two-coin rule whose (theta0, theta1) pair is selected by xi_empty.

    xi_empty below `split` selects components[0], otherwise components[1].
    The shared xi_empty makes restrictions to disjoint sets dependent.
    """
    if len(components) != 2:
        raise ValueError("exactly two mixture components are supported")
    breakpoints = {split}
    for theta0, theta1 in components:
        breakpoints.update((theta0, theta1))
    partition = tuple(sorted(breakpoints))
    low_cells = _cells_below(partition, split)
    high_cells = frozenset(range(len(partition) + 1)) - low_cells
    key_in, key_out = _unary_context_keys()
    entries = []
    for cells, (theta0, theta1) in zip((low_cells, high_cells), components):
        entries.append(TableEntry(bit=True, context_key=key_in,
                                  thresholds=(((), cells),
                                              ((1,), _cells_below(partition, theta1)))))
        entries.append(TableEntry(bit=True, context_key=key_out,
                                  thresholds=(((), cells),
                                              ((1,), _cells_below(partition, theta0)))))
    df = TableDecisionFunction("P", 1, entries=tuple(entries), default=False,
                               context_mode="restriction", partition=partition)
    return {"P": df}


def parity_overlay_rules() -> dict:
    """S(i, j) flips the reference edge bit exactly when xi_i, xi_j sit in
    the same half of [0, 1); this makes |S restricted to any distinct triple|
    have opposite parity to the reference graph's pair count there."""
    edge_local = Structure(OVERLAY_SIG, 2, {"E": [(1, 2), (2, 1)]})
    non_edge_local = Structure(OVERLAY_SIG, 2)
    key_edge = context_key(edge_local, (1, 2))
    key_non = context_key(non_edge_local, (1, 2))
    entries = (
        TableEntry(bit=True, context_key=key_edge,
                   thresholds=(((1,), frozenset({0})), ((2,), frozenset({1})))),
        TableEntry(bit=True, context_key=key_edge,
                   thresholds=(((1,), frozenset({1})), ((2,), frozenset({0})))),
        TableEntry(bit=True, context_key=key_non,
                   thresholds=(((1,), frozenset({0})), ((2,), frozenset({0})))),
        TableEntry(bit=True, context_key=key_non,
                   thresholds=(((1,), frozenset({1})), ((2,), frozenset({1})))),
    )
    df = TableDecisionFunction("S", 2, entries=entries, default=False,
                               context_mode="restriction", partition=(0.5,))
    return {"S": df}


def weak_rep_rules() -> dict:
    """Segment-reading rule realizing the same-class-triple example's S.

    For distinct (i, j): compare j against a fixed anchor (2 when i = 1,
    else 1) inside the reference segment; emit the edge iff the per-i coin
    agrees with "j is in the anchor's block relative to i".  Relative to
    each i this puts exactly the anchor's block (or its complement) into
    S, so of two points in different blocks exactly one is S-linked to i.
    """
    def rule(ctx) -> bool:
        i, j = ctx.tuple
        if i == j:
            return False
        anchor = 2 if i == 1 else 1
        same = ctx.segment().has("R", (i, anchor, j))
        coin = ctx.xi((1,)) < 0.5
        return coin == same

    df = FunctionDecisionFunction("S", 2, rule, context_mode="segment")
    return {"S": df}


# --- bespoke samplers -----------------------------------------------------------

class TdcSampler:
    """Unary mixture: with probability 1/3 the evens; otherwise an
    independent fair coin on each odd number.  Every element's marginal
    inclusion probability is 1/3."""

    def __init__(self):
        self.signature = UNARY_SIG

    def sample(self, src: HierarchicalRandomSource, n: int) -> Structure:
        if src.xi(()) < 1.0 / 3.0:
            chosen = [(i,) for i in range(2, n + 1, 2)]
        else:
            chosen = [(i,) for i in range(1, n + 1, 2) if src.xi((i,)) < 0.5]
        return Structure(UNARY_SIG, n, {"P": chosen})


class LoopViolatorSampler:
    """Frame-wise graph sampler with a loop forced at vertex 1.

    Deliberately breaks exchangeability (vertex 1 is distinguishable);
    used to exercise the failing side of the exchangeability test.
    """

    def __init__(self):
        self._base = FramewiseSampler(builtin_class("graphs"))
        self.signature = self._base.signature

    def sample(self, src: HierarchicalRandomSource, n: int) -> Structure:
        graph = self._base.sample(src, n)
        if n == 0:
            return graph
        edges = set(graph.tuples("E"))
        edges.add((1, 1))
        return Structure(self.signature, n, {"E": edges})


# --- the named examples ---------------------------------------------------------

def paper_example(name: str, n: int, src: HierarchicalRandomSource
                  ) -> tuple[LazyStructure, Structure]:
    """Build a named reference oracle and draw one tied sample of size n."""
    if name == "weak-rep":
        oracle = same_class_triple_oracle()
        return oracle, sample_maxseg_exchangeable(weak_rep_rules(), oracle, n, src)
    if name == "tdc-evens":
        return odd_target_oracle(), TdcSampler().sample(src, n)
    if name == "parity-overlay":
        oracle = parity_overlay_oracle(src)
        return oracle, sample_m_exchangeable(parity_overlay_rules(), oracle, n, src)
    if name == "strong-rep":
        oracle = evens_oracle()
        return oracle, sample_m_exchangeable(two_coin_rules(), oracle, n, src)
    raise KeyError(f"unknown example {name!r}; choose from {PAPER_EXAMPLE_NAMES}")


# --- claim verification ---------------------------------------------------------

def verify_weak_rep(n_samples: int = 10000, n: int = 3, meta_seed: int = 0) -> dict:
    """Exactly one of (1,2), (1,3) is sampled, in every sample."""
    oracle = same_class_triple_oracle()
    rules = weak_rep_rules()
    seeds = SeedStream(meta_seed)
    both = neither = 0
    for i in range(n_samples):
        sample = sample_maxseg_exchangeable(
            rules, oracle, n, HierarchicalRandomSource(seeds[i]))
        a = sample.has("S", (1, 2))
        b = sample.has("S", (1, 3))
        if a and b:
            both += 1
        if not a and not b:
            neither += 1
    premise = not oracle.initial_segment(3).has("R", (1, 2, 3))
    passed = premise and both == 0 and neither == 0
    return {
        "name": "weak-rep",
        "claim": "exactly one of S(1,2), S(1,3) holds in every sample "
                 "(2 and 3 lie in different blocks relative to 1)",
        "passed": passed,
        "details": {"samples": n_samples, "both": both, "neither": neither,
                    "reference_triple_absent": premise},
    }


def verify_tdc_evens(n_samples: int = 6000, n: int = 6, meta_seed: int = 0) -> dict:
    """Every element's marginal inclusion frequency is 1/3 (within 4 sigma)."""
    sampler = TdcSampler()
    seeds = SeedStream(meta_seed)
    counts = {i: 0 for i in range(1, n + 1)}
    for k in range(n_samples):
        sample = sampler.sample(HierarchicalRandomSource(seeds[k]), n)
        for i in range(1, n + 1):
            if sample.has("P", (i,)):
                counts[i] += 1
    target = 1.0 / 3.0
    sigma = (target * (1 - target) / n_samples) ** 0.5
    tolerance = 4 * sigma
    freqs = {i: counts[i] / n_samples for i in counts}
    passed = all(abs(freq - target) <= tolerance for freq in freqs.values())
    return {
        "name": "tdc-evens",
        "claim": f"marginal inclusion frequency 1/3 per element (tolerance {tolerance:.4f})",
        "passed": passed,
        "details": {"samples": n_samples, "frequencies": freqs,
                    "tolerance": tolerance},
    }


def verify_parity_overlay(n_samples: int = 1000, n: int = 6, meta_seed: int = 0) -> dict:
    """|S restricted to a distinct triple| is even iff the triple is in R."""
    seeds = SeedStream(meta_seed)
    violations = 0
    for k in range(n_samples):
        src = HierarchicalRandomSource(seeds[k])
        oracle, sample = paper_example("parity-overlay", n, src)
        reference = oracle.initial_segment(n)
        for x, y, z in itertools.combinations(range(1, n + 1), 3):
            count = sum(1 for pair in ((x, y), (x, z), (y, z))
                        if sample.has("S", pair))
            if (count % 2 == 0) != reference.has("R", (x, y, z)):
                violations += 1
    return {
        "name": "parity-overlay",
        "claim": "pair count of S inside each distinct triple is even iff "
                 "the triple is in the reference's R",
        "passed": violations == 0,
        "details": {"samples": n_samples, "size": n, "violations": violations},
    }


def verify_strong_rep(n_samples: int = 10000, meta_seed: int = 0) -> dict:
    """Marginal inclusion 0.7 on reference-P elements, 0.3 off (within 4 sigma)."""
    oracle = evens_oracle()
    rules = two_coin_rules()
    seeds = SeedStream(meta_seed)
    count_even = count_odd = 0
    for k in range(n_samples):
        sample = sample_m_exchangeable(
            rules, oracle, 2, HierarchicalRandomSource(seeds[k]))
        if sample.has("P", (2,)):
            count_even += 1
        if sample.has("P", (1,)):
            count_odd += 1
    sigma = (0.7 * 0.3 / n_samples) ** 0.5
    tolerance = 4 * sigma
    freq_even = count_even / n_samples
    freq_odd = count_odd / n_samples
    passed = abs(freq_even - 0.7) <= tolerance and abs(freq_odd - 0.3) <= tolerance
    return {
        "name": "strong-rep",
        "claim": f"marginal inclusion 0.7 on P and 0.3 off P (tolerance {tolerance:.4f})",
        "passed": passed,
        "details": {"samples": n_samples, "frequency_on_P": freq_even,
                    "frequency_off_P": freq_odd, "tolerance": tolerance},
    }


def verify_all(meta_seed: int = 0, fast: bool = False) -> list[dict]:
    """Run every catalog claim; `fast` shrinks sample counts for smoke runs."""
    if fast:
        return [
            verify_weak_rep(n_samples=500, meta_seed=meta_seed),
            verify_tdc_evens(n_samples=1500, meta_seed=meta_seed),
            verify_parity_overlay(n_samples=100, meta_seed=meta_seed),
            verify_strong_rep(n_samples=2000, meta_seed=meta_seed),
        ]
    return [
        verify_weak_rep(meta_seed=meta_seed),
        verify_tdc_evens(meta_seed=meta_seed),
        verify_parity_overlay(meta_seed=meta_seed),
        verify_strong_rep(meta_seed=meta_seed),
    ]
