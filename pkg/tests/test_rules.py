"""Decision functions: contexts, table matching, validation, JSON format."""

import itertools
import json
from pathlib import Path

import pytest

from relex import (DecisionContext, FunctionDecisionFunction,
                   HierarchicalRandomSource, Signature, Structure, TableEntry,
                   TableDecisionFunction, context_key, load_rules,
                   normalize_rules, rules_from_json, rules_signature,
                   tuple_pattern)

RULES_DIR = Path(__file__).resolve().parent.parent / "rules"
GRAPH = Signature((("E", 2),))


# --- patterns and context keys ------------------------------------------------------

def test_tuple_pattern_dense_first_occurrence():
    assert tuple_pattern((7,)) == (0,)
    assert tuple_pattern((7, 7)) == (0, 0)
    assert tuple_pattern((7, 2)) == (0, 1)
    assert tuple_pattern((5, 9, 5, 1)) == (0, 1, 0, 2)
    assert tuple_pattern(()) == ()


def test_context_key_invariant_under_relabeling():
    s = Structure(GRAPH, 3, {"E": [(1, 2), (2, 1)]})
    # same situation with roles permuted: edge between the tuple's elements
    t = Structure(GRAPH, 3, {"E": [(2, 3), (3, 2)]})
    assert context_key(s, (1, 2)) == context_key(t, (3, 2))
    # tuple order matters when the situation is asymmetric
    d = Structure(GRAPH, 2, {"E": [(1, 2)]})
    assert context_key(d, (1, 2)) != context_key(d, (2, 1))


def test_context_key_separates_different_situations():
    edge = Structure(GRAPH, 2, {"E": [(1, 2), (2, 1)]})
    non_edge = Structure(GRAPH, 2)
    assert context_key(edge, (1, 2)) != context_key(non_edge, (1, 2))


# --- DecisionContext -------------------------------------------------------------------

def _ctx(tup, partition=(0.5,), seed=3, mode="none", restriction=None, segment=None):
    return DecisionContext(
        HierarchicalRandomSource(seed), "E", tup, partition=partition,
        context_mode=mode,
        restriction_provider=restriction, segment_provider=segment)


def test_context_elements_subset_and_positions():
    ctx = _ctx((4, 9, 4))
    assert ctx.elements() == (4, 9, 4)            # positions are tuple slots
    assert ctx.elements((2,)) == (9,)
    assert ctx.elements((3, 1)) == (4, 4)
    assert ctx.subset() == (4, 9)                 # sorted distinct entries
    assert ctx.subset((1, 3)) == (4,)
    assert ctx.pattern() == (0, 1, 0)


def test_context_xi_matches_source():
    src = HierarchicalRandomSource(3)
    ctx = DecisionContext(src, "E", (4, 9), partition=(0.5,), context_mode="none",
                          restriction_provider=None, segment_provider=None)
    assert ctx.xi() == src.xi((4, 9))
    assert ctx.xi((1,)) == src.xi((4,))
    assert ctx.xi(()) == src.xi(())


def test_context_interval_uses_partition():
    ctx = _ctx((1, 2), partition=(0.25, 0.75))
    u = ctx.xi()
    expected = 0 if u < 0.25 else (1 if u < 0.75 else 2)
    assert ctx.interval() == expected


def test_context_ordering_ranks_match_source_order():
    src = HierarchicalRandomSource(11)
    ctx = DecisionContext(src, "E", (4, 9, 4), partition=(), context_mode="none",
                          restriction_provider=None, segment_provider=None)
    order = src.ordering((4, 9))
    pos = {v: r for r, v in enumerate(order)}
    assert ctx.ordering_ranks() == (pos[4], pos[9], pos[4])


def test_context_restriction_and_key_modes():
    ref = Structure(GRAPH, 9, {"E": [(4, 9), (9, 4)]})
    def restriction(subset):
        from relex import restrict
        return restrict(ref, subset)
    def segment(m):
        from relex import restrict
        return restrict(ref, range(1, m + 1))

    ctx = _ctx((4, 9), mode="restriction", restriction=restriction, segment=segment)
    assert ctx.restriction().has("E", (1, 2))
    edge_local = Structure(GRAPH, 2, {"E": [(1, 2), (2, 1)]})
    assert ctx.context_key() == context_key(edge_local, (1, 2))

    ctx_none = _ctx((4, 9), mode="none")
    with pytest.raises(ValueError):
        ctx_none.context_key()


def test_context_validates_mode_and_positions():
    # unknown modes surface when the reference channel is actually read
    with pytest.raises(ValueError):
        _ctx((1, 2), mode="sideways").context_key()
    ctx = _ctx((1, 2))
    with pytest.raises(ValueError):
        ctx.elements((0,))
    with pytest.raises(ValueError):
        ctx.elements((3,))
    with pytest.raises(ValueError):
        ctx.restriction()   # no provider in mode none


# --- table decision functions --------------------------------------------------------------

def _erdos_renyi():
    return TableDecisionFunction(
        "E", 2,
        entries=(TableEntry(bit=True, pattern=(0, 1),
                            thresholds=(((1, 2), frozenset({0})),)),),
        default=False, context_mode="none", partition=(0.5,))


def test_first_match_wins_and_default_applies():
    df = TableDecisionFunction(
        "E", 2,
        entries=(
            TableEntry(bit=False, pattern=(0, 0)),
            TableEntry(bit=True),                      # unconstrained catch-all
            TableEntry(bit=False),                     # unreachable
        ),
        default=False, context_mode="none", partition=())
    assert df.decide(_ctx((3, 3), partition=())) is False
    assert df.decide(_ctx((3, 4), partition=())) is True

    empty = TableDecisionFunction("E", 2, entries=(), default=True,
                                  context_mode="none", partition=())
    assert empty.decide(_ctx((1, 2), partition=())) is True


def test_threshold_and_ordering_conditions():
    df = _erdos_renyi()
    for seed in range(40):
        ctx = _ctx((1, 2), seed=seed)
        assert df.decide(ctx) == (ctx.xi() < 0.5)
        assert df.decide(_ctx((1, 1), seed=seed)) is False   # pattern excludes loops

    tournament = TableDecisionFunction(
        "E", 2,
        entries=(TableEntry(bit=True, pattern=(0, 1),
                            orderings=(((1, 2), (0, 1)),)),),
        default=False, context_mode="none", partition=())
    for seed in range(30):
        src = HierarchicalRandomSource(seed)
        fwd = tournament.decide(DecisionContext(
            src, "E", (1, 2), partition=(), context_mode="none",
            restriction_provider=None, segment_provider=None))
        bwd = tournament.decide(DecisionContext(
            src, "E", (2, 1), partition=(), context_mode="none",
            restriction_provider=None, segment_provider=None))
        assert fwd != bwd   # exactly one orientation


def test_validation_rejects_malformed_rules():
    with pytest.raises(ValueError):
        TableDecisionFunction("E", 0, entries=(), default=False,
                              context_mode="none", partition=())
    with pytest.raises(ValueError):
        TableDecisionFunction("E", 2, entries=(), default=False,
                              context_mode="none", partition=(0.7, 0.2))   # not increasing
    with pytest.raises(ValueError):
        TableDecisionFunction("E", 2, entries=(), default=False,
                              context_mode="none", partition=(0.0,))       # breakpoint at edge
    with pytest.raises(ValueError):          # pattern not dense
        TableDecisionFunction("E", 2, entries=(TableEntry(bit=True, pattern=(1, 0)),),
                              default=False, context_mode="none", partition=())
    with pytest.raises(ValueError):          # pattern wrong length
        TableDecisionFunction("E", 2, entries=(TableEntry(bit=True, pattern=(0,)),),
                              default=False, context_mode="none", partition=())
    with pytest.raises(ValueError):          # interval index out of range
        TableDecisionFunction("E", 2,
                              entries=(TableEntry(bit=True,
                                                  thresholds=(((1,), frozenset({2})),)),),
                              default=False, context_mode="none", partition=(0.5,))
    with pytest.raises(ValueError):          # threshold position out of range
        TableDecisionFunction("E", 2,
                              entries=(TableEntry(bit=True,
                                                  thresholds=(((3,), frozenset({0})),)),),
                              default=False, context_mode="none", partition=(0.5,))
    with pytest.raises(ValueError):          # ordering position out of range
        TableDecisionFunction("E", 2,
                              entries=(TableEntry(bit=True,
                                                  orderings=(((1, 5), (0, 1)),)),),
                              default=False, context_mode="none", partition=())
    with pytest.raises(ValueError):
        TableDecisionFunction("E", 2, entries=(), default=False,
                              context_mode="diagonal", partition=())


def test_function_decision_function():
    df = FunctionDecisionFunction("E", 2, lambda ctx: ctx.tuple[0] < ctx.tuple[1],
                                  context_mode="none", partition=())
    assert df.decide(_ctx((1, 2), partition=())) is True
    assert df.decide(_ctx((2, 1), partition=())) is False


# --- normalization --------------------------------------------------------------------------

def test_normalize_rules_accepts_three_shapes():
    df = _erdos_renyi()
    assert normalize_rules(df) == {"E": df}
    assert normalize_rules({"E": df}) == {"E": df}
    assert normalize_rules([df]) == {"E": df}
    with pytest.raises(ValueError):
        normalize_rules([df, df])    # duplicate relation
    with pytest.raises(ValueError):
        normalize_rules({"F": df})   # name disagrees with rule


def test_rules_signature_orders_by_name():
    p = TableDecisionFunction("P", 1, entries=(), default=False,
                              context_mode="none", partition=())
    e = _erdos_renyi()
    sig = rules_signature({"P": p, "E": e})
    assert sig == Signature((("E", 2), ("P", 1)))


# --- JSON round trips --------------------------------------------------------------------------

def test_json_round_trip_through_dict_and_text():
    df = _erdos_renyi()
    doc = df.to_json()
    again = rules_from_json(doc)["E"]
    assert again.to_json() == doc
    assert rules_from_json([doc])["E"].to_json() == doc
    assert rules_from_json({"rules": [doc]})["E"].to_json() == doc


def test_position_keys_accept_spacing_variants():
    doc = {
        "relation": {"name": "E", "arity": 2},
        "context": "none",
        "partition": [0.5],
        "default": 0,
        "entries": [
            {"bit": 1, "pattern": [0, 1], "thresholds": {"[1,2]": [0]}},
            {"bit": 1, "pattern": [0, 1], "thresholds": {"[1, 2]": [0]}},
        ],
    }
    df = rules_from_json(doc)["E"]
    first, second = df.entries
    assert first.thresholds == second.thresholds


def test_shipped_rules_files_load_and_round_trip():
    paths = sorted(RULES_DIR.glob("*.json"))
    assert len(paths) == 6
    for path in paths:
        rules = load_rules(str(path))
        assert len(rules) == 1
        df = next(iter(rules.values()))
        doc = json.loads(path.read_text())
        assert df.to_json() == doc


def test_shipped_rules_agree_with_catalog_builders():
    from relex.catalog import (complete_graph_rules, mixed_two_coin_rules,
                               parity_overlay_rules, random_graph_rules,
                               tournament_rules, two_coin_rules)
    expected = {
        "random_graph.json": random_graph_rules()["E"],
        "tournament.json": tournament_rules()["E"],
        "complete.json": complete_graph_rules()["E"],
        "two_coin.json": two_coin_rules()["P"],
        "two_coin_mixed.json": mixed_two_coin_rules()["P"],
        "parity_xor.json": parity_overlay_rules()["S"],
    }
    for filename, df in expected.items():
        loaded = load_rules(str(RULES_DIR / filename))
        assert next(iter(loaded.values())).to_json() == df.to_json()


def test_rules_from_json_rejects_malformed():
    with pytest.raises(ValueError):
        rules_from_json({"context": "none"})                  # missing relation
    with pytest.raises(ValueError):
        rules_from_json({"relation": {"name": "E", "arity": 2},
                         "context": "none", "partition": [], "default": 0,
                         "entries": [{"pattern": [0, 1]}]})   # entry missing bit
