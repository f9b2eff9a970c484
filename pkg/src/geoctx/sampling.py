"""Random presheaves and morphisms for property tests."""

from __future__ import annotations

import random
from typing import Sequence

from .category import FiniteCategory
from .presheaf import NatTrans, Presheaf, iter_nat_trans


def _height_order(C: FiniteCategory) -> list[str]:
    """Objects with every non-identity arrow going from earlier to later."""
    remaining = list(C.objects)
    done: list[str] = []
    while remaining:
        ready = [
            U for U in remaining
            if all(C.src(f) in done for f in C.arrows_into(U) if not C.is_identity(f))
        ]
        if not ready:
            raise ValueError("random_presheaf needs a category without non-identity cycles")
        done.extend(ready)
        remaining = [U for U in remaining if U not in ready]
    return done


def _compatible_families(C: FiniteCategory, U: str, values, restr) -> list[dict[str, object]]:
    """Matching families on the sieve of non-identity arrows into ``U``."""
    arrows = [f for f in C.arrows_into(U) if not C.is_identity(f)]
    out: list[dict] = []
    chosen: dict[str, object] = {}

    def consistent(phi, x) -> bool:
        V = C.src(phi)
        for psi in C.arrows_into(V):
            c = C.compose(phi, psi)
            if c in chosen and restr[psi][x] != chosen[c]:
                return False
        for chi, y in chosen.items():
            for psi in C.hom(V, C.src(chi)):
                if C.compose(chi, psi) == phi and restr[psi][y] != x:
                    return False
        return True

    def rec(k):
        if k == len(arrows):
            out.append(dict(chosen))
            return
        phi = arrows[k]
        for x in values[C.src(phi)]:
            if consistent(phi, x):
                chosen[phi] = x
                rec(k + 1)
                del chosen[phi]

    rec(0)
    return out


def random_presheaf(C: FiniteCategory, rng: random.Random, max_size: int = 4, name: str | None = None) -> Presheaf:
    """A presheaf with at most ``max_size`` sections per object.

    Objects are filled bottom-up; each new section picks a random matching
    family on the arrows below it, so repeats (non-separated sections) and
    missing amalgamations both occur.
    """
    values: dict[str, tuple] = {}
    restr: dict[str, dict] = {}
    for U in _height_order(C):
        fams = _compatible_families(C, U, values, restr)
        n = (0 if rng.random() < 0.1 else rng.randint(1, max_size)) if fams else 0
        secs = tuple(f"{U}{k}" for k in range(n))
        values[U] = secs
        picks = [rng.choice(fams) for _ in secs]
        for f in C.arrows_into(U):
            if C.is_identity(f):
                restr[f] = {s: s for s in secs}
            else:
                restr[f] = {s: fam[f] for s, fam in zip(secs, picks)}
    return Presheaf(C, values, restr, name=name)


def random_nat_trans(F: Presheaf, G: Presheaf, rng: random.Random) -> NatTrans | None:
    """A random morphism ``F -> G`` (``None`` if there is none)."""
    C = F.category
    shuffled = {U: tuple(rng.sample(G.values[U], len(G.values[U]))) for U in C.objects}
    Gs = Presheaf(C, shuffled, G.restrictions, check=False)
    m = next(iter_nat_trans(F, Gs), None)
    if m is None:
        return None
    return NatTrans(F, G, m.components, check=False)


def random_subset(items: Sequence, rng: random.Random) -> list:
    return [x for x in items if rng.random() < 0.5]
