"""Chi-square harness: empirical laws, equality/exchangeability/dissociation tests."""

import json

import pytest

from relex import stattests as st
from relex.amalgamation import builtin_class
from relex.catalog import (
    LoopViolatorSampler,
    complete_graph_rules,
    evens_oracle,
    mixed_two_coin_rules,
    two_coin_rules,
)
from relex.randomness import SeedStream
from relex.samplers import ExchangeableSampler, FramewiseSampler, MExchangeableSampler
from relex.structures import Signature, Structure

UNARY = Signature((("P", 1),))


def _graphs_sampler():
    return FramewiseSampler(builtin_class("graphs"))


class FirstElementBiased:
    """Marks element 1 with probability 0.95 and the rest with 0.05.

    Not relatively exchangeable over any reference that identifies 1 with
    another element: the marginal at position 1 is visibly different.
    """

    signature = UNARY

    def sample(self, src, n):
        chosen = [(i,) for i in range(1, n + 1)
                  if src.xi((i,)) < (0.95 if i == 1 else 0.05)]
        return Structure(UNARY, n, {"P": chosen})


def _law(counts, subset=(1,), n_samples=None):
    total = sum(counts.values()) if n_samples is None else n_samples
    law = st.EmpiricalLaw(subset, total)
    law.counts = dict(counts)
    return law


# --- TestReport -------------------------------------------------------------------

def test_report_verdict_and_json():
    report = st.TestReport(name="demo", statistic=1.5, dof=2, p_value=0.47,
                           alpha=0.05, passed=True,
                           details={"cells": frozenset({"a"})})
    assert report.verdict == "pass"
    blob = report.to_json()
    assert blob["name"] == "demo"
    assert blob["verdict"] == "pass"
    assert blob["p_value"] == 0.47
    json.dumps(blob)  # fully serializable, frozensets coerced

    failing = st.TestReport(name="demo", statistic=99.0, dof=2, p_value=1e-9,
                            alpha=0.05, passed=False)
    assert failing.verdict == "fail"
    assert failing.to_json()["verdict"] == "fail"


# --- EmpiricalLaw -----------------------------------------------------------------

def test_empirical_law_record_and_frequencies():
    marked = Structure(UNARY, 1, {"P": [(1,)]})
    unmarked = Structure(UNARY, 1)
    law = st.EmpiricalLaw((1,), 4)
    law.record(marked)
    law.record(marked)
    law.record(unmarked)
    law.record(marked)
    assert law.counts == {marked.key(): 3, unmarked.key(): 1}
    assert law.structures[marked.key()] == marked
    freqs = law.frequencies()
    assert freqs[marked.key()] == pytest.approx(0.75)
    assert sum(freqs.values()) == pytest.approx(1.0)


def test_empirical_law_seed_forms_agree():
    sampler = _graphs_sampler()
    by_int = st.empirical_law(sampler, (1, 2), 80, 11)
    by_stream = st.empirical_law(sampler, (1, 2), 80, SeedStream(11))
    by_sequence = st.empirical_law(sampler, (1, 2), 80,
                                   [SeedStream(11)[i] for i in range(90)])
    assert by_int.counts == by_stream.counts == by_sequence.counts


def test_empirical_law_offset_slices_the_stream():
    sampler = _graphs_sampler()
    pooled = st.empirical_law(sampler, (1, 2), 80, 11).counts
    head = st.empirical_law(sampler, (1, 2), 40, 11).counts
    tail = st.empirical_law(sampler, (1, 2), 40, 11, offset=40).counts
    merged = dict(head)
    for key, count in tail.items():
        merged[key] = merged.get(key, 0) + count
    assert merged == pooled
    assert head != tail  # different seed batches actually differ


def test_empirical_law_subset_normalized_and_restricted():
    sampler = _graphs_sampler()
    law = st.empirical_law(sampler, (3, 1, 3), 30, 2)
    assert law.subset == (1, 3)
    assert law.counts == st.empirical_law(sampler, (1, 3), 30, 2).counts
    assert all(s.n == 2 for s in law.structures.values())


def test_empirical_law_validation():
    sampler = _graphs_sampler()
    with pytest.raises(ValueError):
        st.empirical_law(sampler, (1, 2), 0, 1)
    with pytest.raises(ValueError):
        st.empirical_law(sampler, (), 10, 1)


# --- equal-law chi-square ---------------------------------------------------------

def test_equal_law_identical_laws_trivially_pass():
    law = _law({"a": 60, "b": 40})
    report = st.test_equal_law(law, law)
    assert report.passed
    assert report.statistic == pytest.approx(0.0)
    assert report.p_value == pytest.approx(1.0)
    assert report.name == "equal-law"


def test_equal_law_detects_bias():
    fair = _law({"a": 500, "b": 500})
    biased = _law({"a": 800, "b": 200})
    report = st.test_equal_law(fair, biased)
    assert not report.passed
    assert report.p_value < 1e-10
    assert report.dof == 1
    assert set(report.details["cells"]) == {"a", "b"}


def test_equal_law_merges_rare_cells():
    law_a = _law({"a": 90, "b": 4, "c": 6})
    law_b = _law({"a": 92, "b": 5, "d": 3})
    report = st.test_equal_law(law_a, law_b)
    cells = report.details["cells"]
    assert set(cells) == {"a", "__merged__"}
    assert cells["__merged__"] == [10, 8]  # b, c, d pooled
    assert report.dof == 1
    assert report.passed


def test_equal_law_degenerates_to_single_cell():
    # the merged remainder is still under the minimum, so it folds into "a"
    law_a = _law({"a": 99, "b": 1})
    law_b = _law({"a": 100})
    report = st.test_equal_law(law_a, law_b)
    assert report.dof == 0
    assert report.p_value == pytest.approx(1.0)
    assert report.passed


def test_equal_law_validation():
    law1 = _law({"a": 10}, subset=(1,))
    law2 = _law({"a": 10}, subset=(1, 2))
    with pytest.raises(ValueError):
        st.test_equal_law(law1, law2)
    with pytest.raises(ValueError):
        st.test_equal_law(law1, law1, alpha=0.0)
    with pytest.raises(ValueError):
        st.test_equal_law(law1, law1, alpha=1.0)
    empty_a = _law({}, n_samples=10)
    empty_b = _law({}, n_samples=10)
    with pytest.raises(ValueError):
        st.test_equal_law(empty_a, empty_b)


# --- exchangeability --------------------------------------------------------------

def test_exchangeability_framewise_graphs_pass():
    report = st.test_exchangeability(_graphs_sampler(), n=3, n_samples=300,
                                     meta_seed=5)
    assert report.passed
    assert report.p_value == pytest.approx(0.301197, abs=1e-4)
    assert report.details["probes"] == 5
    assert report.details["per_alpha"] == pytest.approx(0.01 / 5)
    assert len(report.details["results"]) == 5
    assert all(r["passed"] for r in report.details["results"])


def test_exchangeability_loop_violator_fails():
    report = st.test_exchangeability(LoopViolatorSampler(), n=3, n_samples=300,
                                     meta_seed=5)
    assert not report.passed
    assert report.p_value < 1e-100
    assert any(not r["passed"] for r in report.details["results"])


def test_exchangeability_explicit_permutations():
    report = st.test_exchangeability(_graphs_sampler(), n=3, n_samples=200,
                                     meta_seed=7, permutations=[(2, 1, 3)])
    assert report.details["probes"] == 1
    assert report.details["per_alpha"] == pytest.approx(0.01)
    assert report.passed


def test_exchangeability_degenerate_cases():
    report = st.test_exchangeability(_graphs_sampler(), n=1, n_samples=20,
                                     meta_seed=0)
    assert report.passed and report.details["probes"] == 0
    report = st.test_exchangeability(_graphs_sampler(), n=3, n_samples=20,
                                     meta_seed=0, permutations=[])
    assert report.passed and report.details["probes"] == 0


def test_exchangeability_validation():
    sampler = _graphs_sampler()
    with pytest.raises(ValueError):
        st.test_exchangeability(sampler, n=0, n_samples=10)
    with pytest.raises(ValueError):
        st.test_exchangeability(sampler, n=6, n_samples=10)  # too many perms
    with pytest.raises(ValueError):
        st.test_exchangeability(sampler, n=3, n_samples=10,
                                permutations=[(1, 2)])


# --- relative exchangeability -----------------------------------------------------

def test_relative_exchangeability_two_coin_over_evens_passes():
    sampler = MExchangeableSampler(two_coin_rules(), evens_oracle())
    report = st.test_relative_exchangeability(sampler, evens_oracle(), n=2,
                                              n_samples=250, meta_seed=1)
    assert report.passed
    assert report.name == "relative-exchangeability"
    assert report.details["probes"] == 16
    assert report.details["skipped_pairs"] == 26
    assert report.details["window"] == 4
    first = report.details["results"][0]
    assert set(first) == {"s", "t", "phi", "p_value", "statistic", "dof", "passed"}


def test_relative_exchangeability_biased_sampler_fails():
    report = st.test_relative_exchangeability(FirstElementBiased(), evens_oracle(),
                                              n=1, n_samples=200, window=3,
                                              meta_seed=2)
    assert not report.passed
    assert report.p_value < 1e-50
    # {1} and {3} are both unmarked in the reference, so both directions probe
    assert report.details["probes"] == 2
    assert report.details["skipped_pairs"] == 4


def test_relative_exchangeability_without_embeddings_is_degenerate():
    report = st.test_relative_exchangeability(FirstElementBiased(), evens_oracle(),
                                              n=1, n_samples=50, window=2,
                                              meta_seed=2)
    assert report.passed
    assert report.details["probes"] == 0
    assert report.details["skipped_pairs"] == 2
    assert "note" in report.details


def test_relative_exchangeability_probe_cap_and_validation():
    sampler = MExchangeableSampler(two_coin_rules(), evens_oracle())
    report = st.test_relative_exchangeability(sampler, evens_oracle(), n=2,
                                              n_samples=60, meta_seed=1,
                                              probe_cap=5)
    assert report.details["probes"] == 5
    with pytest.raises(ValueError):
        st.test_relative_exchangeability(sampler, evens_oracle(), n=0,
                                         n_samples=10)
    with pytest.raises(ValueError):
        st.test_relative_exchangeability(sampler, evens_oracle(), n=6,
                                         n_samples=10)


# --- dissociation -----------------------------------------------------------------

def test_dissociation_framewise_graphs_pass():
    report = st.test_dissociation(_graphs_sampler(), (1, 2), (3, 4), 1500,
                                  meta_seed=3)
    assert report.passed
    assert report.p_value == pytest.approx(0.099061, abs=1e-4)
    assert report.details["s"] == [1, 2]
    assert report.details["t"] == [3, 4]


def test_dissociation_global_mixture_fails():
    sampler = MExchangeableSampler(mixed_two_coin_rules(), evens_oracle())
    report = st.test_dissociation(sampler, (1,), (2,), 1500, meta_seed=3)
    assert not report.passed
    assert report.p_value < 1e-50
    assert report.dof == 1


def test_dissociation_constant_sampler_is_degenerate():
    sampler = ExchangeableSampler(complete_graph_rules())
    report = st.test_dissociation(sampler, (1,), (2, 3), 800, meta_seed=0)
    assert report.passed
    assert report.dof == 0
    assert report.details["rows"] == 1 and report.details["cols"] == 1


def test_dissociation_validation():
    sampler = _graphs_sampler()
    with pytest.raises(ValueError):
        st.test_dissociation(sampler, (1, 2), (2, 3), 10)
    with pytest.raises(ValueError):
        st.test_dissociation(sampler, (), (1,), 10)
    with pytest.raises(ValueError):
        st.test_dissociation(sampler, (1,), (2,), 0)
