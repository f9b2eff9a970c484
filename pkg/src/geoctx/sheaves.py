"""Operations in the sheaf topos over a finite site.

Limits of sheaves are computed pointwise. Colimits are pointwise colimits
followed by sheafification, and maps out of them go through
:func:`~geoctx.topology.extend_along_unit`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import InternalError, InternalRouteDisagreement, NotAnEquivalenceRelation, ParentMismatch
from .presheaf import (
    Cone,
    Diagram,
    NatTrans,
    Presheaf,
    Sieve,
    Subpresheaf,
    coequalizer_presheaf,
    compose_nat,
    coproduct_presheaf,
    equalizer_presheaf,
    fibre_product_presheaf,
    pointwise_image,
    presheaf_colimit,
    presheaf_limit,
    subpresheaf_union_pointwise,
    terminal_presheaf,
)
from .report import Verdict, token_str
from .topology import Site, closure, extend_along_unit, sheafify


def is_epimorphism(site: Site, f: NatTrans) -> Verdict:
    """Local surjectivity: every section of the target is covered by
    restrictions lying in the image."""
    C = site.category
    G = f.target
    image = {U: set(f.components[U].values()) for U in C.objects}
    for U in C.objects:
        for s in G.values[U]:
            R = Sieve(U, frozenset(phi for phi in C.arrows_into(U) if G.restrictions[phi][s] in image[C.src(phi)]))
            if R not in site.J[U]:
                return Verdict.fail("epi", {"object": U, "section": token_str(s)},
                                    f"section {token_str(s)} at {U} is not locally in the image")
    return Verdict.ok("epi")


def is_monomorphism(site: Site, f: NatTrans) -> Verdict:
    C = site.category
    for U in C.objects:
        seen = {}
        for s in f.source.values[U]:
            t = f.components[U][s]
            if t in seen:
                return Verdict.fail("mono", {"object": U, "sections": [token_str(seen[t]), token_str(s)], "image": token_str(t)},
                                    f"two sections at {U} have the same image")
            seen[t] = s
    return Verdict.ok("mono")


def is_sheaf_isomorphism(site: Site, f: NatTrans) -> bool:
    return bool(is_monomorphism(site, f)) and bool(is_epimorphism(site, f))


# -- limits -----------------------------------------------------------------


def sheaf_limit(site: Site, diagram: Diagram) -> Cone:
    """Pointwise limit; the empty diagram gives the terminal sheaf."""
    if not diagram.nodes:
        return Cone(terminal_presheaf(site.category), {})
    return presheaf_limit(diagram)


def sheaf_product(site: Site, X: Presheaf, Y: Presheaf) -> Cone:
    return presheaf_limit(Diagram({"0": X, "1": Y}))


def sheaf_fibre_product(site: Site, f: NatTrans, g: NatTrans) -> Cone:
    return fibre_product_presheaf(f, g)


def sheaf_equalizer(site: Site, f: NatTrans, g: NatTrans) -> Subpresheaf:
    return equalizer_presheaf(f, g)


# -- colimits ---------------------------------------------------------------


@dataclass
class SheafColimit:
    """A sheafified pointwise colimit.

    ``cocone`` is the presheaf cocone, ``unit`` the sheafification unit from
    its apex, ``inclusions`` the composite coprojections into ``sheaf``.
    """

    sheaf: Presheaf
    inclusions: list[NatTrans]
    cocone: Cone
    unit: NatTrans

    def copair(self, site: Site, legs: Sequence[NatTrans], target: Presheaf) -> NatTrans:
        """The induced map ``sheaf -> target`` from one leg per node."""
        apex = self.cocone.apex
        C = apex.category
        comps = {U: {} for U in C.objects}
        for (_, inc), leg in zip(self.cocone.legs.items(), legs):
            for U in C.objects:
                for x, t in inc.components[U].items():
                    y = leg.components[U][x]
                    if comps[U].setdefault(t, y) != y:
                        raise ValueError("legs do not form a cocone")
        return extend_along_unit(site, self.unit, NatTrans(apex, target, comps, check=False))


def _finish(site: Site, cocone: Cone) -> SheafColimit:
    X, eta = sheafify(site, cocone.apex)
    incs = [compose_nat(eta, leg) for leg in cocone.legs.values()]
    return SheafColimit(X, incs, cocone, eta)


def sheaf_coproduct(site: Site, family: Sequence[Presheaf]) -> SheafColimit:
    """``a(⊔ F_i)`` with its inclusions; the empty family gives the initial sheaf."""
    return _finish(site, coproduct_presheaf(list(family), site.category))


def sheaf_pushout(site: Site, f: NatTrans, g: NatTrans) -> SheafColimit:
    """Pushout of ``B <- A -> C``; inclusions are ``[B -> P, C -> P]``."""
    D = Diagram({"A": f.source, "B": f.target, "C": g.target}, [("A", "B", f), ("A", "C", g)])
    col = presheaf_colimit(D)
    X, eta = sheafify(site, col.apex)
    legs = {"B": col.legs["B"], "C": col.legs["C"]}
    return SheafColimit(X, [compose_nat(eta, legs["B"]), compose_nat(eta, legs["C"])], Cone(col.apex, legs), eta)


def sheaf_coequalizer(site: Site, f: NatTrans, g: NatTrans) -> tuple[Presheaf, NatTrans]:
    Q0, q0 = coequalizer_presheaf(f, g)
    Q, eta = sheafify(site, Q0)
    return Q, compose_nat(eta, q0)


# -- images and subobjects --------------------------------------------------


@dataclass
class ImageFactorization:
    """``f = i . p`` with ``p`` epi and ``i`` mono; ``subobject`` is ``Im`` as a
    subsheaf of the target."""

    subobject: Subpresheaf
    image: Presheaf
    p: NatTrans
    i: NatTrans


def _image_by_pushout(site: Site, f: NatTrans) -> Subpresheaf:
    po = sheaf_pushout(site, f, f)
    q, r = po.inclusions
    return equalizer_presheaf(q, r)


def _image_by_closure(site: Site, f: NatTrans) -> Subpresheaf:
    return closure(site, pointwise_image(f))


def image_factorization(site: Site, f: NatTrans) -> ImageFactorization:
    """Image as the equalizer of the two maps into the sheafified pushout of
    ``f`` with itself, cross-checked against the closure of the pointwise
    image."""
    A = _image_by_pushout(site, f)
    B = _image_by_closure(site, f)
    if A.subsets != B.subsets:
        U = next(U for U in site.category.objects if A.subsets[U] != B.subsets[U])
        raise InternalRouteDisagreement(
            "image routes disagree",
            {"object": U, "pushout_route": sorted(map(token_str, A.subsets[U])), "closure_route": sorted(map(token_str, B.subsets[U]))},
        )
    Im = A.as_presheaf()
    C = site.category
    p = NatTrans(f.source, Im, f.components, check=False)
    i = A.inclusion(Im)
    for U in C.objects:
        for s, t in f.components[U].items():
            if t not in A.subsets[U]:
                raise InternalError("morphism does not factor through its image", {"object": U, "section": token_str(s)})
    return ImageFactorization(A, Im, p, i)


def subobject_of(f: NatTrans) -> Subpresheaf:
    """The subobject of the target represented by a monomorphism."""
    return pointwise_image(f)


def subsheaf_equal(site: Site, S: Subpresheaf, T: Subpresheaf) -> bool:
    if S.parent is not T.parent:
        raise ParentMismatch("subobjects of different sheaves", {})
    return closure(site, S).subsets == closure(site, T).subsets


def subsheaf_union(site: Site, parent: Presheaf, family: Sequence[Subpresheaf]) -> Subpresheaf:
    """Image of the coproduct of the inclusions: the closure of the pointwise union."""
    return closure(site, subpresheaf_union_pointwise(parent, family))


# -- equivalence relations --------------------------------------------------


@dataclass
class EquivalenceRelation:
    R: Presheaf
    X: Presheaf
    r1: NatTrans
    r2: NatTrans

    def pairs(self, U: str) -> set[tuple]:
        return {(self.r1.components[U][z], self.r2.components[U][z]) for z in self.R.values[U]}


def check_equivalence_relation(site: Site, rel: EquivalenceRelation) -> Verdict:
    """Joint monicity, then reflexivity, symmetry and transitivity pointwise
    on the image of ``(r1, r2)`` (limits of sheaves are pointwise)."""
    C = site.category
    for U in C.objects:
        seen = {}
        for z in rel.R.values[U]:
            key = (rel.r1.components[U][z], rel.r2.components[U][z])
            if key in seen:
                return Verdict.fail("equivalence", {"condition": "mono", "object": U,
                                                    "sections": [token_str(seen[key]), token_str(z)]})
            seen[key] = z
    for U in C.objects:
        E = rel.pairs(U)
        for x in rel.X.values[U]:
            if (x, x) not in E:
                return Verdict.fail("equivalence", {"condition": "reflexive", "object": U, "section": token_str(x)})
        for x, y in E:
            if (y, x) not in E:
                return Verdict.fail("equivalence", {"condition": "symmetric", "object": U, "pair": [token_str(x), token_str(y)]})
        succ: dict = {}
        for x, y in E:
            succ.setdefault(x, set()).add(y)
        for x, y in sorted(E, key=lambda p: (rel.X.index(U)[p[0]], rel.X.index(U)[p[1]])):
            for z in succ.get(y, ()):
                if (x, z) not in E:
                    return Verdict.fail("equivalence", {"condition": "transitive", "object": U,
                                                        "pairs": [[token_str(x), token_str(y)], [token_str(y), token_str(z)]]})
    return Verdict.ok("equivalence")


def quotient_by_relation(site: Site, rel: EquivalenceRelation) -> tuple[Presheaf, NatTrans]:
    """``X/R`` as the sheafified coequalizer of ``r1, r2``; effectiveness
    (``R = X x_Q X``) is re-checked."""
    v = check_equivalence_relation(site, rel)
    if not v:
        raise NotAnEquivalenceRelation(f"not an equivalence relation ({v.witness['condition']})", v.witness)
    Q, q = sheaf_coequalizer(site, rel.r1, rel.r2)
    C = site.category
    for U in C.objects:
        kernel = {(x, y) for x in rel.X.values[U] for y in rel.X.values[U] if q.components[U][x] == q.components[U][y]}
        if kernel != rel.pairs(U):
            raise InternalError("quotient is not effective", {"object": U})
    return Q, q


def relation_from_subobject(X: Presheaf, E: Subpresheaf, XX: Cone) -> EquivalenceRelation:
    """Turn a subobject ``E`` of the product cone ``XX = X x X`` into a relation."""
    R = E.as_presheaf()
    C = X.category
    r1 = NatTrans(R, X, {U: {z: XX.legs["0"].components[U][z] for z in R.values[U]} for U in C.objects}, check=False)
    r2 = NatTrans(R, X, {U: {z: XX.legs["1"].components[U][z] for z in R.values[U]} for U in C.objects}, check=False)
    return EquivalenceRelation(R, X, r1, r2)
