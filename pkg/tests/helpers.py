"""Shared brute-force oracles and generators for the test suite.

Everything here is deliberately naive: direct quantification over all
injections, all assignments, or all structures.  The library under test is
never used to compute an expected value, only to produce the values being
checked.
"""

from __future__ import annotations

import itertools
import random

from relex import Injection, Signature, Structure


def naive_embeddings(s: Structure, t: Structure) -> list[tuple[int, ...]]:
    """All embeddings of s into t by filtering every injection of universes.

    Returned as sorted image sequences (image of 1, image of 2, ...).
    """
    if s.signature != t.signature:
        return []
    found = []
    for images in itertools.permutations(range(1, t.n + 1), s.n):
        ok = True
        for name, arity in s.signature:
            for tup in itertools.product(range(1, s.n + 1), repeat=arity):
                image = tuple(images[c - 1] for c in tup)
                if s.has(name, tup) != t.has(name, image):
                    ok = False
                    break
            if not ok:
                break
        if ok:
            found.append(images)
    return sorted(found)


def naive_models(theory, n: int) -> list[Structure]:
    """All models of a universal theory on [1, n] by filtering every structure."""
    from relex import satisfies

    models = [s for s in all_structures(theory.signature, n) if satisfies(theory, s)]
    return sorted(models, key=lambda s: s.key())


def all_structures(signature: Signature, n: int) -> list[Structure]:
    """Every structure on [1, n] over the signature (exponential; keep n small)."""
    tuple_space = []
    for name, arity in signature:
        for tup in itertools.product(range(1, n + 1), repeat=arity):
            tuple_space.append((name, tup))
    out = []
    for bits in itertools.product((False, True), repeat=len(tuple_space)):
        relations: dict[str, list] = {name: [] for name, _ in signature}
        for bit, (name, tup) in zip(bits, tuple_space):
            if bit:
                relations[name].append(tup)
        out.append(Structure(signature, n, relations))
    return out


def random_structure(rng: random.Random, signature: Signature, n: int,
                     density: float = 0.5) -> Structure:
    relations: dict[str, list] = {}
    for name, arity in signature:
        chosen = [tup for tup in itertools.product(range(1, n + 1), repeat=arity)
                  if rng.random() < density]
        relations[name] = chosen
    return Structure(signature, n, relations)


def random_graph(rng: random.Random, n: int, density: float = 0.5) -> Structure:
    """Random loop-free symmetric structure over the E/2 signature."""
    sig = Signature((("E", 2),))
    edges = []
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            if rng.random() < density:
                edges.append((i, j))
                edges.append((j, i))
    return Structure(sig, n, {"E": edges})


def injection_images(phis: list[Injection]) -> list[tuple[int, ...]]:
    """Embeddings as sorted image sequences, comparable to naive_embeddings."""
    return sorted(phi.image_sequence() for phi in phis)
