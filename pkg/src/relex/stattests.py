"""Chi-square verification of distributional invariances of samplers.

Empirical marginal laws are tallied over independent seeds; equality of
laws, exchangeability under relabelings, invariance under reference-
structure embeddings, and independence across disjoint subsets are all
reduced to chi-square tests with rare-cell merging and Bonferroni
correction across probes.  Every report is reproducible from its meta
seed.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

from scipy.stats import chi2

from .embeddings import enumerate_embeddings
from .randomness import HierarchicalRandomSource, SeedStream
from .samplers import Oracle, ensure_lazy
from .structures import Injection, Structure, relabel, restrict

_MIN_EXPECTED = 5.0


@dataclass
class TestReport:
    name: str
    statistic: float
    dof: int
    p_value: float
    alpha: float
    passed: bool
    details: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "statistic": self.statistic,
            "dof": self.dof,
            "p_value": self.p_value,
            "alpha": self.alpha,
            "verdict": self.verdict,
            "details": json.loads(json.dumps(self.details, default=str)),
        }


class EmpiricalLaw:
    """Tally of restricted samples: canonical serialization -> count."""

    def __init__(self, subset: tuple[int, ...], n_samples: int):
        self.subset = tuple(subset)
        self.n_samples = n_samples
        self.counts: dict[str, int] = {}
        self.structures: dict[str, Structure] = {}

    def record(self, structure: Structure) -> None:
        key = structure.key()
        self.counts[key] = self.counts.get(key, 0) + 1
        self.structures.setdefault(key, structure)

    def frequencies(self) -> dict[str, float]:
        return {k: c / self.n_samples for k, c in sorted(self.counts.items())}


def _seed_at(seeds: Union[SeedStream, Sequence[int]], index: int) -> int:
    if isinstance(seeds, SeedStream):
        return seeds[index]
    return seeds[index]


def empirical_law(sampler, subset: Sequence[int], n_samples: int,
                  seeds: Union[SeedStream, Sequence[int], int],
                  offset: int = 0) -> EmpiricalLaw:
    """Law of the sampler's output restricted to `subset`, over fresh seeds.

    `seeds` may be a SeedStream, a sequence of integers, or a meta seed
    (int) from which a stream is derived; `offset` shifts into the stream
    so successive batches stay independent.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if isinstance(seeds, int):
        seeds = SeedStream(seeds)
    subset = tuple(sorted(set(subset)))
    if not subset:
        raise ValueError("subset must be nonempty")
    top = max(subset)
    law = EmpiricalLaw(subset, n_samples)
    for i in range(n_samples):
        src = HierarchicalRandomSource(_seed_at(seeds, offset + i))
        sample = sampler.sample(src, top)
        law.record(restrict(sample, subset))
    return law


# --- two-sample chi-square ------------------------------------------------------

def _merged_cells(law_a: EmpiricalLaw, law_b: EmpiricalLaw) -> dict[str, tuple[int, int]]:
    """Union support with rare cells merged so every expected count is >= 5."""
    n_a, n_b = law_a.n_samples, law_b.n_samples
    n_min = min(n_a, n_b)
    total = n_a + n_b
    keys = sorted(set(law_a.counts) | set(law_b.counts))
    cells: dict[str, tuple[int, int]] = {}
    small_a = small_b = 0
    small_seen = False
    for key in keys:
        a = law_a.counts.get(key, 0)
        b = law_b.counts.get(key, 0)
        if n_min * (a + b) / total < _MIN_EXPECTED:
            small_a += a
            small_b += b
            small_seen = True
        else:
            cells[key] = (a, b)
    if small_seen:
        if cells and n_min * (small_a + small_b) / total < _MIN_EXPECTED:
            smallest = min(cells, key=lambda k: sum(cells[k]))
            a0, b0 = cells.pop(smallest)
            cells["__merged__"] = (a0 + small_a, b0 + small_b)
        else:
            cells["__merged__"] = (small_a, small_b)
    return cells


def test_equal_law(law_a: EmpiricalLaw, law_b: EmpiricalLaw,
                   alpha: float = 0.01) -> TestReport:
    """Two-sample chi-square homogeneity test on merged support.

    A single surviving cell yields a degenerate (always-passing) report:
    both laws are concentrated on the same support atom.
    """
    if len(law_a.subset) != len(law_b.subset):
        raise ValueError("laws live on subsets of different sizes")
    if not (0.0 < alpha < 1.0):
        raise ValueError("alpha must lie in (0, 1)")
    n_a, n_b = law_a.n_samples, law_b.n_samples
    total = n_a + n_b
    cells = _merged_cells(law_a, law_b)
    if not cells:
        raise ValueError("insufficient counts: no occupied cells")
    dof = len(cells) - 1
    contributions = {}
    statistic = 0.0
    if dof > 0:
        for key, (a, b) in sorted(cells.items()):
            pooled = a + b
            exp_a = n_a * pooled / total
            exp_b = n_b * pooled / total
            contribution = (a - exp_a) ** 2 / exp_a + (b - exp_b) ** 2 / exp_b
            contributions[key] = contribution
            statistic += contribution
        p_value = float(chi2.sf(statistic, dof))
    else:
        p_value = 1.0
    return TestReport(
        name="equal-law", statistic=statistic, dof=dof, p_value=p_value,
        alpha=alpha, passed=p_value >= alpha,
        details={"cells": {k: list(v) for k, v in sorted(cells.items())},
                 "contributions": contributions,
                 "n_a": n_a, "n_b": n_b})


# --- exchangeability -------------------------------------------------------------

def _relabeled_law(sampler, perm: tuple[int, ...], n: int, n_samples: int,
                   seeds: SeedStream, offset: int) -> EmpiricalLaw:
    """Law of the relabeled output X^perm on [1, n] over fresh seeds."""
    phi = Injection(dict(enumerate(perm, start=1)))
    law = EmpiricalLaw(tuple(range(1, n + 1)), n_samples)
    for i in range(n_samples):
        src = HierarchicalRandomSource(seeds[offset + i])
        sample = sampler.sample(src, n)
        relabeled, _ = relabel(sample, phi)
        law.record(relabeled)
    return law


def test_exchangeability(sampler, n: int, n_samples: int, alpha: float = 0.01,
                         meta_seed: int = 0,
                         permutations: Optional[Iterable[tuple[int, ...]]] = None
                         ) -> TestReport:
    """Compare the law of X against each relabeling X^sigma (Bonferroni).

    Without an explicit permutation list, all non-identity permutations of
    [1, n] are probed, which requires n <= 5.  Each probe uses a fresh
    independent batch of samples.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if permutations is None:
        if n > 5:
            raise ValueError("probing all permutations needs n <= 5; "
                             "pass an explicit permutation subset")
        identity = tuple(range(1, n + 1))
        perms = [p for p in itertools.permutations(range(1, n + 1)) if p != identity]
    else:
        perms = [tuple(p) for p in permutations]
        for p in perms:
            if sorted(p) != list(range(1, n + 1)):
                raise ValueError(f"{p} is not a permutation of [1, {n}]")
    seeds = SeedStream(meta_seed)
    base = empirical_law(sampler, range(1, n + 1), n_samples, seeds, offset=0)
    if not perms:
        return TestReport(name="exchangeability", statistic=0.0, dof=0,
                          p_value=1.0, alpha=alpha, passed=True,
                          details={"probes": 0, "note": "no non-identity permutations"})
    local_alpha = alpha / len(perms)
    worst: Optional[TestReport] = None
    probe_results = []
    for b, perm in enumerate(perms, start=1):
        law_perm = _relabeled_law(sampler, perm, n, n_samples, seeds,
                                  offset=b * n_samples)
        sub = test_equal_law(base, law_perm, alpha=local_alpha)
        probe_results.append({"permutation": list(perm), "p_value": sub.p_value,
                              "statistic": sub.statistic, "dof": sub.dof,
                              "passed": sub.passed})
        if worst is None or sub.p_value < worst.p_value:
            worst = sub
    adjusted_p = min(1.0, worst.p_value * len(perms))
    passed = all(r["passed"] for r in probe_results)
    return TestReport(
        name="exchangeability", statistic=worst.statistic, dof=worst.dof,
        p_value=adjusted_p, alpha=alpha, passed=passed,
        details={"probes": len(perms), "per_alpha": local_alpha,
                 "n_samples_per_batch": n_samples, "results": probe_results})


# --- relative exchangeability -----------------------------------------------------

def test_relative_exchangeability(sampler, oracle: Oracle, n: int,
                                  n_samples: int, alpha: float = 0.01,
                                  window: Optional[int] = None,
                                  meta_seed: int = 0,
                                  probe_cap: int = 60) -> TestReport:
    """Invariance of marginal laws under embeddings of reference restrictions.

    For subset pairs (S, T) inside [1, window] with |S| = |T| <= n and an
    embedding phi of the reference restricted to S into the reference
    restricted to T, the law of X restricted to S must equal the
    phi-pullback of the law of X restricted to T.  Pairs with no embedding
    are skipped and reported.  Bonferroni over executed probes.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > 5:
        raise ValueError("n must be <= 5")
    window = window if window is not None else 2 * n
    lazy = ensure_lazy(oracle)
    subsets = [tuple(c)
               for size in range(1, n + 1)
               for c in itertools.combinations(range(1, window + 1), size)]
    probes: list[tuple[tuple[int, ...], tuple[int, ...], Injection]] = []
    skipped = 0
    for s_set in subsets:
        for t_set in subsets:
            if len(t_set) != len(s_set) or t_set == s_set:
                continue
            m_s = lazy.restrict_to(s_set)
            m_t = lazy.restrict_to(t_set)
            embeddings = enumerate_embeddings(m_s, m_t)
            if not embeddings:
                skipped += 1
                continue
            for phi in embeddings:
                probes.append((s_set, t_set, phi))
    probes = probes[:probe_cap]
    if not probes:
        return TestReport(name="relative-exchangeability", statistic=0.0, dof=0,
                          p_value=1.0, alpha=alpha, passed=True,
                          details={"probes": 0, "skipped_pairs": skipped,
                                   "note": "no embeddings found in the window"})
    seeds = SeedStream(meta_seed)
    local_alpha = alpha / len(probes)
    law_cache: dict[tuple[tuple[int, ...], int], EmpiricalLaw] = {}
    next_offset = 0
    probe_results = []
    worst: Optional[TestReport] = None

    def law_for(subset: tuple[int, ...], batch: int) -> EmpiricalLaw:
        nonlocal next_offset
        cache_key = (subset, batch)
        if cache_key not in law_cache:
            law_cache[cache_key] = empirical_law(
                sampler, subset, n_samples, seeds, offset=next_offset)
            next_offset += n_samples
        return law_cache[cache_key]

    for idx, (s_set, t_set, phi) in enumerate(probes):
        law_s = law_for(s_set, 0)
        law_t_raw = empirical_law(sampler, t_set, n_samples, seeds,
                                  offset=next_offset)
        next_offset += n_samples
        pulled = EmpiricalLaw(s_set, law_t_raw.n_samples)
        for key, count in law_t_raw.counts.items():
            structure = law_t_raw.structures[key]
            back, _ = relabel(structure, phi)
            pulled.counts[back.key()] = pulled.counts.get(back.key(), 0) + count
            pulled.structures.setdefault(back.key(), back)
        sub = test_equal_law(law_s, pulled, alpha=local_alpha)
        probe_results.append({
            "s": list(s_set), "t": list(t_set), "phi": phi.items(),
            "p_value": sub.p_value, "statistic": sub.statistic,
            "dof": sub.dof, "passed": sub.passed})
        if worst is None or sub.p_value < worst.p_value:
            worst = sub
    adjusted_p = min(1.0, worst.p_value * len(probes))
    passed = all(r["passed"] for r in probe_results)
    return TestReport(
        name="relative-exchangeability", statistic=worst.statistic,
        dof=worst.dof, p_value=adjusted_p, alpha=alpha, passed=passed,
        details={"probes": len(probes), "skipped_pairs": skipped,
                 "per_alpha": local_alpha, "window": window,
                 "results": probe_results})


# --- dissociation ------------------------------------------------------------------

def test_dissociation(sampler, s_set: Sequence[int], t_set: Sequence[int],
                      n_samples: int, alpha: float = 0.01,
                      meta_seed: int = 0) -> TestReport:
    """Chi-square independence of (X restricted to S, X restricted to T).

    One batch of samples fills a contingency table over the two restricted
    laws; rows/columns with small marginals are merged until every expected
    count reaches 5.  A single remaining row or column is degenerate
    independence and passes.
    """
    s_set = tuple(sorted(set(s_set)))
    t_set = tuple(sorted(set(t_set)))
    if not s_set or not t_set:
        raise ValueError("subsets must be nonempty")
    if set(s_set) & set(t_set):
        raise ValueError("subsets must be disjoint")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    seeds = SeedStream(meta_seed)
    top = max(s_set + t_set)
    table: dict[tuple[str, str], int] = {}
    for i in range(n_samples):
        src = HierarchicalRandomSource(seeds[i])
        sample = sampler.sample(src, top)
        key = (restrict(sample, s_set).key(), restrict(sample, t_set).key())
        table[key] = table.get(key, 0) + 1

    rows = sorted({k[0] for k in table})
    cols = sorted({k[1] for k in table})
    counts = {(r, c): table.get((r, c), 0) for r in rows for c in cols}

    def merge_pass(axis_labels: list[str], axis: int) -> list[list[str]]:
        groups = [[label] for label in axis_labels]
        def group_total(group):
            return sum(counts[(r, c)]
                       for r in (group if axis == 0 else rows)
                       for c in (cols if axis == 0 else group))
        while len(groups) > 1:
            totals = [group_total(g) for g in groups]
            # the smallest opposite-axis marginal bounds the minimum expected count
            other_min = min(
                sum(counts[(r, c)] for (r, c) in counts
                    if (c == label if axis == 0 else r == label))
                for label in (cols if axis == 0 else rows))
            smallest = min(range(len(groups)), key=lambda g: totals[g])
            if totals[smallest] * other_min / n_samples >= _MIN_EXPECTED:
                break
            merge_into = min((g for g in range(len(groups)) if g != smallest),
                             key=lambda g: totals[g])
            groups[merge_into].extend(groups[smallest])
            del groups[smallest]
        return groups

    row_groups = merge_pass(rows, 0)
    col_groups = merge_pass(cols, 1)
    merged = {}
    for gi, rgroup in enumerate(row_groups):
        for gj, cgroup in enumerate(col_groups):
            merged[(gi, gj)] = sum(counts[(r, c)] for r in rgroup for c in cgroup)
    row_tot = {gi: sum(merged[(gi, gj)] for gj in range(len(col_groups)))
               for gi in range(len(row_groups))}
    col_tot = {gj: sum(merged[(gi, gj)] for gi in range(len(row_groups)))
               for gj in range(len(col_groups))}
    dof = (len(row_groups) - 1) * (len(col_groups) - 1)
    statistic = 0.0
    if dof > 0:
        for (gi, gj), observed in merged.items():
            expected = row_tot[gi] * col_tot[gj] / n_samples
            if expected > 0:
                statistic += (observed - expected) ** 2 / expected
        p_value = float(chi2.sf(statistic, dof))
    else:
        p_value = 1.0
    return TestReport(
        name="dissociation", statistic=statistic, dof=dof, p_value=p_value,
        alpha=alpha, passed=p_value >= alpha,
        details={"s": list(s_set), "t": list(t_set),
                 "rows": len(row_groups), "cols": len(col_groups),
                 "n_samples": n_samples})
