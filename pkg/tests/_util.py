"""Shared builders and independent oracles for the test-suite."""

from __future__ import annotations

import random
from itertools import product

from geoctx.category import FiniteCategory, validate_category
from geoctx.geometry import FiniteSpace, context_from_finite_space, space_site, validate_geometric_context
from geoctx.presheaf import NatTrans, Presheaf
from geoctx.sampling import random_presheaf
from geoctx.topology import sheafify


def space(points: str, opens: dict[str, str]) -> FiniteSpace:
    return FiniteSpace(tuple(points), {k: frozenset(v) for k, v in opens.items()})


POINT = space("p", {"e": "", "P": "p"})
SIERP = space("01", {"e": "", "S1": "1", "S": "01"})
INT = space("xmy", {"e": "", "X": "x", "Y": "y", "XY": "xy", "L": "xmy"})

PT_CATEGORY = validate_category(["pt"], [("id_pt", "pt", "pt")])
PT_COV = {"pt": [["id_pt"]]}


def full_subcategory(C: FiniteCategory, keep) -> FiniteCategory:
    keep = [o for o in C.objects if o in set(keep)]
    ks = set(keep)
    arrows = [(a, s, t) for a, (s, t) in C.arrows.items() if s in ks and t in ks]
    comp = {k: v for k, v in C.composition.items() if all(C.src(x) in ks and C.dst(x) in ks for x in k)}
    return validate_category(keep, arrows, {o: C.identity[o] for o in keep}, comp)


def delete_object(C, cov, P, obj):
    """Full subcategory without ``obj``; covering families lose their arrows into or out of it."""
    C2 = full_subcategory(C, [o for o in C.objects if o != obj])
    cov2 = {}
    for U in C2.objects:
        fams = []
        for f in cov[U]:
            g = frozenset(a for a in f if a in C2.arrows)
            if g not in fams:
                fams.append(g)
        cov2[U] = fams
    return C2, cov2, frozenset(a for a in P if a in C2.arrows)


def failing(C, cov, P) -> list[str]:
    return [v.check for v in validate_geometric_context(C, P, cov=cov).verdicts if not v]


def random_sheaf(site, rng: random.Random, max_size: int = 3) -> Presheaf:
    return sheafify(site, random_presheaf(site.category, rng, max_size))[0]


# -- oracles ----------------------------------------------------------------


def all_maps(A, B):
    """Every function ``A -> B`` as a dict."""
    A, B = list(A), list(B)
    for img in product(B, repeat=len(A)):
        yield dict(zip(A, img))


def right_cancellable_on_sets(f: dict, A, B, max_size: int = 3) -> bool:
    """``f: A -> B`` is right-cancellable against every set of size <= max_size."""
    for n in range(max_size + 1):
        T = list(range(n))
        maps = list(all_maps(B, T))
        for g in maps:
            for h in maps:
                if g != h and all(g[f[a]] == h[f[a]] for a in A):
                    return False
    return True


def stalk_sheafification_sizes(space: FiniteSpace, C: FiniteCategory, F: Presheaf) -> dict[str, int]:
    """``a(F)(U)`` for a finite space: compatible choices of sections over the
    minimal neighbourhoods ``U_p`` of the points of ``U``.

    Uses the basis of minimal open neighbourhoods, not covering sieves.
    """
    name = {s: n for n, s in space.opens.items()}
    nbhd = {p: min((s for s in space.opens.values() if p in s), key=len) for p in space.points}
    arrow = {(C.src(a), C.dst(a)): a for a in C.arrows}
    sizes = {}
    for U, opn in space.opens.items():
        pts = sorted(opn)
        count = 0
        for choice in product(*(F.values[name[nbhd[p]]] for p in pts)):
            sec = dict(zip(pts, choice))
            ok = True
            for p in pts:
                for q in pts:
                    if nbhd[q] <= nbhd[p] and p != q:
                        a = arrow[(name[nbhd[q]], name[nbhd[p]])]
                        if F.restrictions[a][sec[p]] != sec[q]:
                            ok = False
            count += ok
        sizes[U] = count
    return sizes


def nat_from_maps(F: Presheaf, G: Presheaf, comps) -> NatTrans | None:
    try:
        return NatTrans(F, G, comps)
    except Exception:
        return None


def context(space_: FiniteSpace):
    return context_from_finite_space(space_)


def site_of(space_: FiniteSpace):
    from geoctx.topology import Site

    C, cov = space_site(space_)
    return Site.from_pretopology(C, cov)
