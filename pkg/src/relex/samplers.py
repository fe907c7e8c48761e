"""Random-structure generators driven by subset-keyed randomness.

Four per-tuple samplers (plain exchangeable, reference-restricted,
initial-segment, and the frame-wise uniform construction over a class) plus
age-indexed laws estimated by Monte Carlo and exact conditional sequential
growth.  All samplers are pure functions of (inputs, seed) and exactly
projective: sampling n points and restricting to [1, m] is bitwise the same
as sampling m points with the same seed, because every choice is keyed by
the subset it concerns.
"""

from __future__ import annotations

import itertools
from typing import Callable, Mapping, Optional, Sequence, Union

from .amalgamation import FiniteClass, _amalgam_classes
from .embeddings import (LazyStructure, enumerate_embeddings, natural_embedding)
from .randomness import (HierarchicalRandomSource, SeedStream, permutation_rank)
from .rules import (DecisionContext, DecisionFunction, normalize_rules,
                    rules_signature)
from .structures import Signature, Structure, relabel, restrict

Oracle = Union[Structure, LazyStructure]


class AmalgamationFailure(RuntimeError):
    """No member extends the built substructures at some subset.

    Carries the offending subset (global labels) and the family of its
    co-dimension-one restrictions, each on [1, |subset| - 1]: a constructive
    witness that the class lacks |subset|-DAP.
    """

    def __init__(self, subset: tuple[int, ...], family: list[Structure],
                 class_name: str = ""):
        self.subset = tuple(subset)
        self.family = list(family)
        where = f" in class {class_name!r}" if class_name else ""
        super().__init__(f"no amalgam over subset {self.subset}{where}")


class ZeroProbabilityConditioning(RuntimeError):
    """Sequential growth hit a prefix with (near-)zero table mass."""

    def __init__(self, step: int):
        self.step = step
        super().__init__(f"conditioning event at step {step} has probability below the floor")


# --- reference-oracle plumbing -------------------------------------------------

def _providers(oracle: Optional[Oracle]):
    """(restriction_provider, segment_provider) for a reference structure."""
    if oracle is None:
        return None, None
    if isinstance(oracle, LazyStructure):
        return oracle.restrict_to, oracle.initial_segment
    if isinstance(oracle, Structure):
        def restriction_provider(subset):
            return restrict(oracle, subset)

        def segment_provider(m: int) -> Structure:
            if m > oracle.n:
                raise ValueError(
                    f"reference structure has {oracle.n} points; segment [1, {m}] unavailable")
            return restrict(oracle, range(1, m + 1))

        return restriction_provider, segment_provider
    raise TypeError("reference oracle must be a Structure or LazyStructure")


def ensure_lazy(oracle: Oracle) -> LazyStructure:
    if isinstance(oracle, LazyStructure):
        return oracle
    if isinstance(oracle, Structure):
        def builder(m: int) -> Structure:
            if m > oracle.n:
                raise ValueError(f"finite reference exhausted at size {oracle.n}")
            return restrict(oracle, range(1, m + 1))
        return LazyStructure(oracle.signature, builder, name="finite")
    raise TypeError("reference oracle must be a Structure or LazyStructure")


# --- per-tuple samplers --------------------------------------------------------

_ALLOWED_CONTEXTS = {
    "exchangeable": ("none",),
    "m-exchangeable": ("none", "restriction"),
    "maxseg": ("none", "restriction", "segment"),
}


def _sample_by_rules(rules: Mapping[str, DecisionFunction], n: int,
                     src: HierarchicalRandomSource, kind: str,
                     oracle: Optional[Oracle]) -> Structure:
    allowed = _ALLOWED_CONTEXTS[kind]
    for df in rules.values():
        if df.context_mode not in allowed:
            raise ValueError(
                f"{kind} sampling cannot serve context mode {df.context_mode!r} "
                f"(rule for {df.relation!r})")
    restriction_provider, segment_provider = _providers(oracle)
    signature = rules_signature(rules)
    relations = {}
    for name in signature.names():
        df = rules[name]
        chosen = []
        for tup in itertools.product(range(1, n + 1), repeat=df.arity):
            ctx = DecisionContext(
                src, name, tup, partition=df.partition,
                context_mode=df.context_mode,
                restriction_provider=restriction_provider,
                segment_provider=segment_provider)
            if df.decide(ctx):
                chosen.append(tup)
        relations[name] = chosen
    return Structure(signature, n, relations)


def sample_exchangeable(rules, n: int, src: HierarchicalRandomSource) -> Structure:
    """Tuple membership decided by context-free rules on subset-keyed randomness."""
    return _sample_by_rules(normalize_rules(rules), n, src, "exchangeable", None)


def sample_m_exchangeable(rules, oracle: Oracle, n: int,
                          src: HierarchicalRandomSource) -> Structure:
    """Rules may additionally read the reference restricted to the tuple's range."""
    return _sample_by_rules(normalize_rules(rules), n, src, "m-exchangeable", oracle)


def sample_maxseg_exchangeable(rules, oracle: Oracle, n: int,
                               src: HierarchicalRandomSource) -> Structure:
    """Rules may read the reference's initial segment up to the largest entry."""
    return _sample_by_rules(normalize_rules(rules), n, src, "maxseg", oracle)


# --- frame-wise uniform construction -------------------------------------------

def _local_restriction(decided: Mapping[str, set], names, elems: Sequence[int]) -> dict[str, set]:
    pos = {e: j for j, e in enumerate(elems, start=1)}
    out: dict[str, set] = {name: set() for name in names}
    for name in names:
        for gtup in decided[name]:
            if all(c in pos for c in gtup):
                out[name].add(tuple(pos[c] for c in gtup))
    return out


def sample_framewise(klass: FiniteClass, n: int, src: HierarchicalRandomSource,
                     rep_weights: Optional[Sequence[float]] = None) -> Structure:
    """Grow a structure subset by subset, uniformly over amalgam classes.

    Singletons are drawn from the size-1 members through an equal-measure
    partition of xi_{i}.  Each larger subset s (size order, then
    lexicographic) gets the tuples with range exactly s: the members on
    [1, |s|] extending all proper restrictions are grouped by isomorphism
    class; xi_s picks a class (equal-width intervals over the representative
    list, or `rep_weights` at steps where the class count matches); the
    concrete member within the class is orbit[rank(ordering of s) mod orbit
    size], which is uniform because the orbit size divides |s|!.

    The decision at s reads only the structures already built on proper
    subsets of s, xi_s, and the ordering of s.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if rep_weights is not None:
        rep_weights = tuple(float(w) for w in rep_weights)
        if not rep_weights or any(w <= 0 for w in rep_weights):
            raise ValueError("rep_weights must be positive")
    names = klass.signature.names()
    if n == 0:
        return Structure(klass.signature, 0)

    age1 = klass.enumerate(1)
    if not age1:
        raise ValueError(f"class {klass.name!r} has no members of size 1")
    decided: dict[str, set] = {name: set() for name in names}
    for i in range(1, n + 1):
        u = src.xi((i,))
        member = age1[min(int(u * len(age1)), len(age1) - 1)]
        for name in names:
            for tup in member.tuples(name):
                decided[name].add(tuple(i for _ in tup))

    for k in range(2, n + 1):
        full_local = frozenset(range(1, k + 1))
        for s in itertools.combinations(range(1, n + 1), k):
            elems = list(s)
            partial = _local_restriction(decided, names, elems)
            classes = _amalgam_classes(klass, k, partial)
            if not classes.representatives:
                family = []
                for removed in elems:
                    rest = [e for e in elems if e != removed]
                    local = _local_restriction(decided, names, rest)
                    family.append(Structure(klass.signature, k - 1, local))
                raise AmalgamationFailure(s, family, klass.name)
            reps = classes.representatives
            u = src.xi(s)
            if rep_weights is not None and len(rep_weights) == len(reps):
                total = sum(rep_weights)
                cum = 0.0
                class_idx = len(reps) - 1
                for j, w in enumerate(rep_weights):
                    cum += w
                    if u < cum / total:
                        class_idx = j
                        break
            else:
                class_idx = min(int(u * len(reps)), len(reps) - 1)
            orbit = classes.orbits[class_idx]
            pos = {e: j for j, e in enumerate(elems, start=1)}
            local_order = tuple(pos[x] for x in src.ordering(s))
            amalgam = orbit[permutation_rank(local_order) % len(orbit)]
            for name in names:
                for tup in amalgam.tuples(name):
                    if frozenset(tup) == full_local:
                        decided[name].add(tuple(elems[c - 1] for c in tup))

    return Structure(klass.signature, n, decided)


# --- age-indexed laws and sequential growth ------------------------------------

class AgeIndexedLaw:
    """Per age member, a probability table over structures on its size.

    Tables are keyed by the member's serialization; each table is a
    deterministically ordered list of (structure, probability) pairs over a
    possibly different output signature.
    """

    def __init__(self, signature: Signature, cap: int):
        self.signature = signature  # output signature of the sampled structures
        self.cap = cap
        self.members: dict[str, Structure] = {}
        self.tables: dict[str, tuple[tuple[Structure, float], ...]] = {}
        self.max_discrepancy: float = 0.0
        self.worst_pair: Optional[tuple[str, str]] = None

    def add_table(self, member: Structure, distribution: Mapping[Structure, float]) -> None:
        total = sum(distribution.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"table probabilities sum to {total}, expected 1")
        for outcome in distribution:
            if outcome.n != member.n or outcome.signature != self.signature:
                raise ValueError("table outcome has wrong size or signature")
        self.members[member.key()] = member
        self.tables[member.key()] = tuple(
            sorted(distribution.items(), key=lambda item: item[0].key()))

    def table_for(self, member: Structure) -> tuple[tuple[Structure, float], ...]:
        try:
            return self.tables[member.key()]
        except KeyError:
            raise ValueError(
                f"law has no table for the given structure of size {member.n}") from None


def _total_variation(p: Mapping[str, float], q: Mapping[str, float]) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


def age_indexed_from_sampler(sampler, oracle: Oracle, klass: FiniteClass,
                             cap: int, n_samples: int, meta_seed: int = 0,
                             embed_bound: int = 32) -> AgeIndexedLaw:
    """Estimate per-age-member output laws through greedy natural embeddings.

    For each member S of the class's age up to `cap`, finds the greedy
    embedding of S into the reference, draws `n_samples` structures (fresh
    seeds from a meta-seeded stream), pulls each back along the embedding,
    and tallies.  Afterwards computes, over every embedding between age
    members, the total-variation distance between the smaller member's
    table and the pullback of the larger's; the worst value is reported as
    `max_discrepancy` (statistically zero for genuinely invariant samplers).
    """
    lazy = ensure_lazy(oracle)
    law = AgeIndexedLaw(sampler.signature, cap)
    seeds = SeedStream(meta_seed)
    seed_idx = 0
    members: list[Structure] = []
    for size in range(1, cap + 1):
        members.extend(klass.enumerate(size))
    for member in members:
        rho = natural_embedding(member, lazy, embed_bound)
        m_needed = max(rho.image_sequence()) if member.n else 0
        counts: dict[str, list] = {}
        for _ in range(n_samples):
            src = HierarchicalRandomSource(seeds[seed_idx])
            seed_idx += 1
            sample = sampler.sample(src, m_needed)
            pulled, _ = relabel(sample, rho)
            slot = counts.setdefault(pulled.key(), [pulled, 0])
            slot[1] += 1
        law.add_table(member, {structure: count / n_samples
                               for structure, count in counts.values()})

    worst = 0.0
    worst_pair = None
    for small in members:
        p = {structure.key(): prob for structure, prob in law.table_for(small)}
        for large in members:
            if large.n < small.n:
                continue
            for phi in enumerate_embeddings(small, large):
                pulled_probs: dict[str, float] = {}
                for outcome, prob in law.table_for(large):
                    pulled, _ = relabel(outcome, phi)
                    pulled_probs[pulled.key()] = pulled_probs.get(pulled.key(), 0.0) + prob
                tv = _total_variation(p, pulled_probs)
                if tv > worst:
                    worst = tv
                    worst_pair = (small.key(), large.key())
    law.max_discrepancy = worst
    law.worst_pair = worst_pair
    return law


def sample_sequential(law: AgeIndexedLaw, oracle: Oracle, n: int,
                      src: HierarchicalRandomSource,
                      epsilon: float = 1e-6) -> Structure:
    """Grow X|_[1], ..., X|_[n] by exact conditional sampling from the tables.

    At step m the table attached to the reference's segment on [1, m] is
    conditioned on agreeing with the already-built X|_[1, m-1]; the
    conditional outcome is picked by xi_{[1, m]}.  Raises
    ZeroProbabilityConditioning when the conditioning event's mass falls
    below `epsilon`.
    """
    _, segment_provider = _providers(oracle)
    current = Structure(law.signature, 0)
    for m in range(1, n + 1):
        segment = segment_provider(m)
        table = law.table_for(segment)
        prefix_key = current.key()
        candidates = [(outcome, prob) for outcome, prob in table
                      if restrict(outcome, range(1, m)).key() == prefix_key]
        mass = sum(prob for _, prob in candidates)
        if mass < epsilon:
            raise ZeroProbabilityConditioning(m)
        u = src.xi(tuple(range(1, m + 1))) * mass
        cum = 0.0
        chosen = candidates[-1][0]
        for outcome, prob in candidates:
            cum += prob
            if u < cum:
                chosen = outcome
                break
        current = chosen
    return current


# --- sampler objects (uniform interface for the test harness) -------------------

class ExchangeableSampler:
    """Context-free rule sampler with a stable (sample, signature) interface."""

    def __init__(self, rules):
        self.rules = normalize_rules(rules)
        for df in self.rules.values():
            if df.context_mode != "none":
                raise ValueError("exchangeable rules must use context mode 'none'")
        self.signature = rules_signature(self.rules)

    def sample(self, src: HierarchicalRandomSource, n: int) -> Structure:
        return sample_exchangeable(self.rules, n, src)


class MExchangeableSampler:
    def __init__(self, rules, oracle: Oracle):
        self.rules = normalize_rules(rules)
        self.oracle = oracle
        self.signature = rules_signature(self.rules)

    def sample(self, src: HierarchicalRandomSource, n: int) -> Structure:
        return sample_m_exchangeable(self.rules, self.oracle, n, src)


class MaxSegSampler:
    def __init__(self, rules, oracle: Oracle):
        self.rules = normalize_rules(rules)
        self.oracle = oracle
        self.signature = rules_signature(self.rules)

    def sample(self, src: HierarchicalRandomSource, n: int) -> Structure:
        return sample_maxseg_exchangeable(self.rules, self.oracle, n, src)


class FramewiseSampler:
    def __init__(self, klass: FiniteClass, rep_weights: Optional[Sequence[float]] = None):
        self.klass = klass
        self.rep_weights = rep_weights
        self.signature = klass.signature

    def sample(self, src: HierarchicalRandomSource, n: int) -> Structure:
        return sample_framewise(self.klass, n, src, rep_weights=self.rep_weights)


class SequentialSampler:
    def __init__(self, law: AgeIndexedLaw, oracle: Oracle, epsilon: float = 1e-6):
        self.law = law
        self.oracle = oracle
        self.epsilon = epsilon
        self.signature = law.signature

    def sample(self, src: HierarchicalRandomSource, n: int) -> Structure:
        return sample_sequential(self.law, self.oracle, n, src, epsilon=self.epsilon)
