"""Core structure type: construction, relabeling, isomorphism, serialization."""

import itertools
import json
import random

import pytest

from helpers import all_structures, random_structure
from relex import (Injection, Signature, Structure, canonical_form, deserialize,
                   dump_structure, is_isomorphic, load_structure, relabel,
                   restrict, serialize)

GRAPH = Signature((("E", 2),))
MIXED = Signature((("P", 1), ("R", 3)))


# --- Signature ---------------------------------------------------------------

def test_signature_accessors():
    sig = Signature((("P", 1), ("E", 2)))
    assert sig.names() == ("P", "E")
    assert sig.arity("E") == 2
    assert sig.max_arity() == 2
    assert "P" in sig and "Q" not in sig
    assert len(sig) == 2
    assert list(sig) == [("P", 1), ("E", 2)]


def test_signature_rejects_bad_symbols():
    with pytest.raises(ValueError):
        Signature((("E", 2), ("E", 3)))
    with pytest.raises(ValueError):
        Signature((("E", 0),))
    with pytest.raises(ValueError):
        Signature((("", 1),))


def test_signature_equality_is_order_sensitive():
    a = Signature((("P", 1), ("E", 2)))
    b = Signature((("E", 2), ("P", 1)))
    assert a != b
    assert a == Signature((("P", 1), ("E", 2)))
    assert hash(a) == hash(Signature((("P", 1), ("E", 2))))


# --- Structure ---------------------------------------------------------------

def test_structure_stores_sorted_sets():
    s = Structure(GRAPH, 3, {"E": [(2, 1), (1, 2), (2, 1)]})
    assert s.tuples("E") == ((1, 2), (2, 1))
    assert s.has("E", (1, 2)) and not s.has("E", (1, 3))
    assert list(s.universe()) == [1, 2, 3]


def test_structure_validates_tuples():
    with pytest.raises(ValueError):
        Structure(GRAPH, 2, {"E": [(1, 2, 3)]})       # wrong arity
    with pytest.raises(ValueError):
        Structure(GRAPH, 2, {"E": [(0, 1)]})          # below universe
    with pytest.raises(ValueError):
        Structure(GRAPH, 2, {"E": [(1, 3)]})          # above universe
    with pytest.raises(ValueError):
        Structure(GRAPH, 2, {"F": [(1, 2)]})          # undeclared relation
    with pytest.raises(ValueError):
        Structure(GRAPH, -1)


def test_structure_equality_and_hash():
    a = Structure(GRAPH, 2, {"E": [(1, 2)]})
    b = Structure(GRAPH, 2, {"E": [(1, 2)]})
    c = Structure(GRAPH, 2, {"E": [(2, 1)]})
    assert a == b and hash(a) == hash(b)
    assert a != c
    assert len({a, b, c}) == 2


def test_empty_signature_structure():
    s = Structure(Signature(()), 4)
    assert s.n == 4
    assert deserialize(serialize(s)) == s


# --- Injection ---------------------------------------------------------------

def test_injection_basics():
    phi = Injection({1: 3, 2: 5})
    assert phi(1) == 3 and phi(2) == 5
    assert phi.domain == (1, 2)
    assert phi.image() == frozenset({3, 5})
    assert phi.image_sequence() == (3, 5)
    assert phi.apply((2, 1, 1)) == (5, 3, 3)


def test_injection_rejects_non_injective_and_non_positive():
    with pytest.raises(ValueError):
        Injection({1: 2, 3: 2})
    with pytest.raises(ValueError):
        Injection({0: 1})
    with pytest.raises(ValueError):
        Injection({1: 0})


def test_injection_compose_and_inverse():
    inner = Injection({1: 2, 2: 4})
    outer = Injection({2: 7, 4: 9, 5: 1})
    comp = outer.compose(inner)
    assert comp(1) == 7 and comp(2) == 9
    inv = comp.inverse()
    assert inv(7) == 1 and inv(9) == 2
    assert Injection.from_sequence((4, 2, 7)).items() == [(1, 4), (2, 2), (3, 7)]
    ident = Injection.identity((3, 1))
    assert ident(1) == 1 and ident(3) == 3


# --- relabel / restrict --------------------------------------------------------

def test_relabel_matches_direct_membership():
    rng = random.Random(11)
    for _ in range(25):
        n = rng.randint(1, 5)
        s = random_structure(rng, MIXED, n)
        k = rng.randint(1, n)
        domain = rng.sample(range(1, 8), k)
        image = rng.sample(range(1, n + 1), k)
        phi = Injection(dict(zip(domain, image)))
        result, index_map = relabel(s, phi)
        assert result.n == k
        assert index_map.image_sequence() == tuple(sorted(domain))
        for name, arity in MIXED:
            for tup in itertools.product(range(1, k + 1), repeat=arity):
                expected = s.has(name, tuple(phi(index_map(c)) for c in tup))
                assert result.has(name, tup) == expected


def test_relabel_rejects_image_outside_universe():
    s = Structure(GRAPH, 2, {"E": [(1, 2)]})
    with pytest.raises(ValueError):
        relabel(s, Injection({1: 1, 2: 3}))


def test_restrict_reindexes_increasing():
    s = Structure(GRAPH, 4, {"E": [(2, 4), (4, 2), (1, 2), (2, 1)]})
    r = restrict(s, {4, 2})
    assert r.n == 2
    assert r.tuples("E") == ((1, 2), (2, 1))   # 2 -> 1, 4 -> 2
    assert restrict(s, range(1, 5)) == s
    assert restrict(s, ()).n == 0


# --- isomorphism and canonical forms -------------------------------------------

def test_is_isomorphic_returns_valid_witness():
    a = Structure(GRAPH, 3, {"E": [(1, 2), (2, 1)]})
    b = Structure(GRAPH, 3, {"E": [(2, 3), (3, 2)]})
    phi = is_isomorphic(a, b)
    assert phi is not None
    for i, j in itertools.product(range(1, 4), repeat=2):
        assert a.has("E", (i, j)) == b.has("E", (phi(i), phi(j)))


def test_is_isomorphic_distinguishes():
    path = Structure(GRAPH, 3, {"E": [(1, 2), (2, 1), (2, 3), (3, 2)]})
    triangle = Structure(GRAPH, 3, {"E": [(i, j) for i in range(1, 4)
                                          for j in range(1, 4) if i != j]})
    assert is_isomorphic(path, triangle) is None
    assert is_isomorphic(path, Structure(GRAPH, 4)) is None


def test_canonical_form_classifies_exactly_like_isomorphism():
    structures = all_structures(GRAPH, 3)
    assert len(structures) == 2 ** 9
    rng = random.Random(5)
    pool = rng.sample(structures, 60)
    for a in pool[:20]:
        for b in pool[20:40]:
            same = canonical_form(a) == canonical_form(b)
            assert same == (is_isomorphic(a, b) is not None)


def test_canonical_form_is_a_fixed_point_and_isomorphic_to_input():
    rng = random.Random(7)
    for _ in range(20):
        s = random_structure(rng, MIXED, rng.randint(1, 4))
        c = canonical_form(s)
        assert is_isomorphic(s, c) is not None
        assert canonical_form(c) == c


# --- serialization ---------------------------------------------------------------

def test_serialize_round_trip_random():
    rng = random.Random(3)
    for _ in range(30):
        s = random_structure(rng, MIXED, rng.randint(0, 4))
        assert deserialize(serialize(s)) == s


def test_serialize_is_canonical_json():
    s = Structure(GRAPH, 2, {"E": [(2, 1), (1, 2)]})
    text = serialize(s)
    assert json.loads(text) == {
        "universe": 2,
        "signature": [{"name": "E", "arity": 2}],
        "relations": {"E": [[1, 2], [2, 1]]},
    }
    assert " " not in text


def test_deserialize_rejects_malformed():
    with pytest.raises(ValueError):
        deserialize("not json")
    with pytest.raises(ValueError):
        deserialize("[1,2]")
    with pytest.raises(ValueError):
        deserialize('{"universe": 2}')


def test_file_round_trip(tmp_path):
    s = Structure(MIXED, 3, {"P": [(2,)], "R": [(1, 2, 3)]})
    path = str(tmp_path / "s.json")
    dump_structure(s, path)
    assert load_structure(path) == s
