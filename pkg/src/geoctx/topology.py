"""Grothendieck pretopologies and topologies on finite categories, the sheaf
condition, and sheafification.

Because every ``J(U)`` is a finite set of sieves closed under binary
intersection, it has a least element ``R_min(U)``. Every covering sieve
contains it, so the colimit defining the plus construction is attained at
``R_min(U)``: ``F+(U)`` is exactly the set of matching families for ``F`` on
``R_min(U)``, with no further quotient. Restriction along ``f: V -> U`` pulls
a family back along ``f`` and then restricts it to ``R_min(V)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

from .category import FiniteCategory, is_cartesian_arrow, pullback
from .errors import InternalError, MixedTargets, NotASheaf, NotATopology
from .presheaf import (
    NatTrans,
    Presheaf,
    Sieve,
    Subpresheaf,
    all_sieves,
    compose_nat,
    matching_families,
    maximal_sieve,
    pullback_sieve,
    sieve_generated_by,
    sieve_generators,
    yoneda,
    yoneda_morphism,
)
from .report import Verdict, token_str

Pretopology = Mapping[str, tuple[frozenset[str], ...]]
Topology = Mapping[str, frozenset[Sieve]]


# -- pretopologies ----------------------------------------------------------


def _canon(C: FiniteCategory, a: str) -> str:
    """Least arrow (by declaration order) equal to ``a`` up to an iso of its source."""
    best = a
    for u in C.arrows_into(C.src(a)):
        if C.is_iso(u):
            b = C.compose(a, u)
            if C.arrow_index[b] < C.arrow_index[best]:
                best = b
    return best


def _canon_family(C: FiniteCategory, fam: Iterable[str]) -> frozenset[str]:
    return frozenset(_canon(C, a) for a in fam)


def _family_list(C: FiniteCategory, fam: Iterable[str]) -> list[str]:
    return sorted(fam, key=C.arrow_index.__getitem__)


def normalize_pretopology(C: FiniteCategory, cov: Mapping[str, Iterable[Iterable[str]]]) -> dict[str, tuple[frozenset[str], ...]]:
    """Coerce families to frozensets, check targets, drop duplicates (order kept)."""
    out: dict[str, tuple[frozenset[str], ...]] = {}
    for U in C.objects:
        seen: list[frozenset[str]] = []
        for fam in cov.get(U, ()):
            fam = frozenset(fam)
            for a in fam:
                if C.dst(a) != U:
                    raise MixedTargets(f"covering family of {U} contains {a} with target {C.dst(a)}", {"object": U, "arrow": a})
            if fam not in seen:
                seen.append(fam)
        out[U] = tuple(seen)
    for U in cov:
        C.check_object(U)
    return out


def validate_pretopology(C: FiniteCategory, cov: Mapping[str, Iterable[Iterable[str]]]) -> Verdict:
    """Check the four pretopology axioms; families are compared up to iso.

    Axioms: (1) covering arrows are cartesian, (2) coverings pull back to
    coverings, (3) composites of coverings are coverings, (4) singleton
    isomorphisms are coverings.
    """
    cov = normalize_pretopology(C, cov)
    canon = {U: {_canon_family(C, fam) for fam in cov[U]} for U in C.objects}

    for U in C.objects:
        for fam in cov[U]:
            for a in _family_list(C, fam):
                if not is_cartesian_arrow(C, a):
                    return Verdict.fail("pretopology", {"axiom": 1, "object": U, "family": _family_list(C, fam), "arrow": a},
                                        f"covering arrow {a} is not cartesian")

    for U in C.objects:
        for fam in cov[U]:
            for phi in C.arrows_into(U):
                V = C.src(phi)
                pulled = []
                for rho in _family_list(C, fam):
                    pb = pullback(C, phi, rho)
                    if pb is None:
                        return Verdict.fail("pretopology", {"axiom": 1, "object": U, "family": _family_list(C, fam), "arrow": rho, "along": phi},
                                            f"no pullback of {rho} along {phi}")
                    pulled.append(pb.p1)
                if _canon_family(C, pulled) not in canon[V]:
                    return Verdict.fail(
                        "pretopology",
                        {"axiom": 2, "object": U, "family": _family_list(C, fam), "arrow": phi, "pulled_back": _family_list(C, set(pulled))},
                        f"pullback of a covering of {U} along {phi} is not a covering of {V}",
                    )

    for U in C.objects:
        for fam in cov[U]:
            partial = {frozenset()}
            for rho in _family_list(C, fam):
                options = {frozenset(C.compose(rho, b) for b in sub) for sub in cov[C.src(rho)]}
                partial = {p | o for p in partial for o in options}
            for comp in sorted(partial, key=lambda s: (len(s), sorted(C.arrow_index[a] for a in s))):
                if _canon_family(C, comp) not in canon[U]:
                    return Verdict.fail(
                        "pretopology",
                        {"axiom": 3, "object": U, "family": _family_list(C, fam), "composite": _family_list(C, comp)},
                        f"a composite of coverings of {U} is not a covering",
                    )

    for phi, (V, U) in C.arrows.items():
        if C.is_iso(phi) and _canon_family(C, [phi]) not in canon[U]:
            return Verdict.fail("pretopology", {"axiom": 4, "object": U, "arrow": phi}, f"isomorphism {phi} is not a covering")

    return Verdict.ok("pretopology")


def topology_from_pretopology(C: FiniteCategory, cov: Mapping[str, Iterable[Iterable[str]]]) -> dict[str, frozenset[Sieve]]:
    """``J(U)``: sieves containing the sieve generated by some covering of ``U``."""
    cov = normalize_pretopology(C, cov)
    J = {}
    for U in C.objects:
        gens = [sieve_generated_by(C, fam, U).arrows for fam in cov[U]]
        J[U] = frozenset(R for R in all_sieves(C, U) if any(g <= R.arrows for g in gens))
    return J


def validate_topology(C: FiniteCategory, J: Mapping[str, Iterable[Sieve]]) -> Verdict:
    """Check the three topology axioms.

    The maximal-sieve axiom (3) is checked first since the other two are
    meaningless without it; then stability (1) and transitivity (2).
    """
    Jset = {U: frozenset(J.get(U, ())) for U in C.objects}
    for U in C.objects:
        for R in Jset[U]:
            if R.anchor != U:
                return Verdict.fail("topology", {"axiom": 0, "object": U, "sieve": sorted(R.arrows)}, f"sieve in J({U}) is anchored at {R.anchor}")
    for U in C.objects:
        if maximal_sieve(C, U) not in Jset[U]:
            return Verdict.fail("topology", {"axiom": 3, "object": U}, f"maximal sieve on {U} is not covering")
    for V in C.objects:
        for R in _ordered(C, Jset[V]):
            for phi in C.arrows_into(V):
                if pullback_sieve(C, phi, R) not in Jset[C.src(phi)]:
                    return Verdict.fail(
                        "topology",
                        {"axiom": 1, "object": V, "arrow": phi, "sieve": sieve_generators(C, R)},
                        f"pullback of a covering sieve of {V} along {phi} is not covering",
                    )
    for U in C.objects:
        for S in all_sieves(C, U):
            if S in Jset[U]:
                continue
            for R in _ordered(C, Jset[U]):
                if all(pullback_sieve(C, phi, S) in Jset[C.src(phi)] for phi in R.arrows):
                    return Verdict.fail(
                        "topology",
                        {"axiom": 2, "object": U, "sieve": sieve_generators(C, R), "local_sieve": sieve_generators(C, S)},
                        f"a sieve on {U} is locally covering but not covering",
                    )
    return Verdict.ok("topology")


def _ordered(C: FiniteCategory, sieves: Iterable[Sieve]) -> list[Sieve]:
    idx = C.arrow_index
    return sorted(sieves, key=lambda s: (len(s.arrows), sorted(idx[a] for a in s.arrows)))


# -- sites ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Site:
    """A finite category with a Grothendieck topology and, usually, the
    pretopology that generates it."""

    category: FiniteCategory
    J: Mapping[str, frozenset[Sieve]]
    cov: Mapping[str, tuple[frozenset[str], ...]] | None = field(default=None)

    @classmethod
    def from_pretopology(cls, C: FiniteCategory, cov, check: bool = True) -> "Site":
        cov = normalize_pretopology(C, cov)
        if check:
            v = validate_pretopology(C, cov)
            if not v:
                raise NotATopology(v.detail, v.witness)
        return cls(C, topology_from_pretopology(C, cov), cov)

    @classmethod
    def from_topology(cls, C: FiniteCategory, J, check: bool = True) -> "Site":
        J = {U: frozenset(J.get(U, ())) for U in C.objects}
        if check:
            v = validate_topology(C, J)
            if not v:
                raise NotATopology(v.detail, v.witness)
        return cls(C, J, None)

    @classmethod
    def minimal(cls, C: FiniteCategory) -> "Site":
        return cls(C, {U: frozenset({maximal_sieve(C, U)}) for U in C.objects},
                   {U: (frozenset({C.id(U)}),) for U in C.objects})

    def covering_sieves(self, U: str) -> list[Sieve]:
        return self._covering[U]

    @cached_property
    def _covering(self) -> dict[str, list[Sieve]]:
        return {U: _ordered(self.category, self.J[U]) for U in self.category.objects}

    def is_covering_sieve(self, R: Sieve) -> bool:
        return R in self.J[R.anchor]

    @cached_property
    def _least(self) -> dict[str, Sieve]:
        out = {}
        for U in self.category.objects:
            sieves = self.J[U]
            if not sieves:
                raise NotATopology(f"J({U}) is empty", {"object": U})
            R = Sieve(U, frozenset.intersection(*(s.arrows for s in sieves)))
            if R not in sieves:
                raise NotATopology(f"J({U}) is not closed under intersection", {"object": U})
            out[U] = R
        return out

    def least_covering_sieve(self, U: str) -> Sieve:
        return self._least[U]

    def covers(self, U: str) -> tuple[frozenset[str], ...]:
        if self.cov is None:
            return tuple(frozenset(R.arrows) for R in self.covering_sieves(U))
        return self.cov[U]


# -- the sheaf condition ----------------------------------------------------


def _amalgamation_failure(F: Presheaf, U: str, arrows: list[str], families) -> dict | None:
    """Compare ``F(U)`` with the given matching families along ``arrows``."""
    image: dict[tuple, list] = {}
    for s in F.values[U]:
        image.setdefault(tuple(F.restrictions[a][s] for a in arrows), []).append(s)
    for key, secs in image.items():
        if len(secs) > 1:
            return {"kind": "not separated", "sections": [token_str(secs[0]), token_str(secs[1])]}
    for fam in families:
        if fam not in image:
            return {"kind": "no amalgamation", "family": {a: token_str(x) for a, x in zip(arrows, fam)}}
    return None


def _sieve_form(site: Site, F: Presheaf) -> dict | None:
    C = site.category
    for U in C.objects:
        for R in site.covering_sieves(U):
            arrows = R.sorted_arrows(C)
            fams = [tuple(m[a] for a in arrows) for m in matching_families(F, R)]
            bad = _amalgamation_failure(F, U, arrows, fams)
            if bad is not None:
                return {"object": U, "sieve": sieve_generators(C, R), **bad}
    return None


def _family_matches(C: FiniteCategory, F: Presheaf, fam: list[str]) -> list[tuple]:
    """Compatible tuples ``(x_i)`` over a covering family (span formulation)."""
    constraints: list[list[tuple[int, str, str]]] = [[] for _ in fam]
    for j, rj in enumerate(fam):
        for i in range(j + 1):
            ri = fam[i]
            for W in C.objects:
                for a in C.hom(W, C.src(ri)):
                    ra = C.compose(ri, a)
                    for b in C.hom(W, C.src(rj)):
                        if C.compose(rj, b) == ra and not (i == j and a == b):
                            constraints[j].append((i, a, b))
    out = []
    chosen: list = []

    def rec(j):
        if j == len(fam):
            out.append(tuple(chosen))
            return
        for x in F.values[C.src(fam[j])]:
            ok = True
            for i, a, b in constraints[j]:
                xi = x if i == j else chosen[i]
                if F.restrictions[a][xi] != F.restrictions[b][x]:
                    ok = False
                    break
            if ok:
                chosen.append(x)
                rec(j + 1)
                chosen.pop()

    rec(0)
    return out


def _cover_form(site: Site, F: Presheaf) -> dict | None:
    C = site.category
    for U in C.objects:
        for fam in site.cov[U]:
            arrows = _family_list(C, fam)
            bad = _amalgamation_failure(F, U, arrows, _family_matches(C, F, arrows))
            if bad is not None:
                return {"object": U, "sieve": arrows, **bad}
    return None


def is_sheaf(site: Site, F: Presheaf) -> Verdict:
    """Sheaf condition over every covering sieve.

    When the site carries its generating pretopology the covering-family
    formulation is evaluated as well; the two must agree.
    """
    w = _sieve_form(site, F)
    if site.cov is not None:
        w2 = _cover_form(site, F)
        if (w is None) != (w2 is None):
            raise InternalError(
                "sieve and covering-family sheaf conditions disagree",
                {"sieve_form": w, "cover_form": w2},
            )
    if w is None:
        return Verdict.ok("sheaf")
    return Verdict.fail("sheaf", w, f"sheaf condition fails at {w['object']}: {w['kind']}")


def is_separated(site: Site, F: Presheaf) -> Verdict:
    C = site.category
    for U in C.objects:
        for R in site.covering_sieves(U):
            arrows = R.sorted_arrows(C)
            seen: dict[tuple, object] = {}
            for s in F.values[U]:
                key = tuple(F.restrictions[a][s] for a in arrows)
                if key in seen:
                    return Verdict.fail("separated", {"object": U, "sieve": sieve_generators(C, R),
                                                      "sections": [token_str(seen[key]), token_str(s)]})
                seen[key] = s
    return Verdict.ok("separated")


def is_subcanonical(site: Site) -> Verdict:
    C = site.category
    for U in C.objects:
        v = is_sheaf(site, yoneda(C, U))
        if not v:
            return Verdict.fail("subcanonical", {"representable": U, **v.witness}, f"h({U}) is not a sheaf")
    return Verdict.ok("subcanonical")


# -- sheafification ---------------------------------------------------------


def plus_construction(site: Site, F: Presheaf) -> tuple[Presheaf, NatTrans]:
    """``F+`` with its unit. Sections at ``U`` are tuples of sections of ``F``
    indexed by the arrows of ``R_min(U)`` in declaration order."""
    C = site.category
    order = {U: site.least_covering_sieve(U).sorted_arrows(C) for U in C.objects}
    vals = {}
    for U in C.objects:
        arrows = order[U]
        vals[U] = tuple(tuple(m[a] for a in arrows) for m in matching_families(F, site.least_covering_sieve(U)))
    restr = {}
    for f, (V, U) in C.arrows.items():
        pos = {a: i for i, a in enumerate(order[U])}
        picks = [pos[C.compose(f, psi)] for psi in order[V]]
        restr[f] = {x: tuple(x[i] for i in picks) for x in vals[U]}
    Fp = Presheaf(C, vals, restr, name=f"{F.name}+" if F.name else None, check=False)
    eta = NatTrans(
        F, Fp,
        {U: {s: tuple(F.restrictions[a][s] for a in order[U]) for s in F.values[U]} for U in C.objects},
        check=False,
    )
    return Fp, eta


def sheafify(site: Site, F: Presheaf) -> tuple[Presheaf, NatTrans]:
    """The associated sheaf ``a(F)`` with its unit ``eta: F -> a(F)``.

    A sheaf is returned unchanged (with the identity unit). Otherwise the
    plus construction is applied once or twice, stopping as soon as the
    result is a sheaf.
    """
    if is_sheaf(site, F):
        C = F.category
        return F, NatTrans(F, F, {U: {s: s for s in F.values[U]} for U in C.objects}, check=False)
    F1, e1 = plus_construction(site, F)
    if not is_sheaf(site, F1):
        F2, e2 = plus_construction(site, F1)
        if not is_sheaf(site, F2):
            raise InternalError("double plus construction did not produce a sheaf", {"presheaf": F.name})
        F1, e1 = F2, compose_nat(e2, e1)
    return _relabel(F1, e1)


def _relabel(aF: Presheaf, eta: NatTrans) -> tuple[Presheaf, NatTrans]:
    """Readable tokens: a section in the image of the unit takes the token
    of its first preimage; the others become fresh ``+k``."""
    F = eta.source
    C = aF.category
    names: dict[str, dict] = {}
    for U in C.objects:
        m: dict = {}
        for s in F.values[U]:
            m.setdefault(eta.components[U][s], s)
        used = set(m.values())
        k = 0
        for t in aF.values[U]:
            if t not in m:
                while f"+{k}" in used:
                    k += 1
                m[t] = f"+{k}"
                used.add(m[t])
        names[U] = m
    vals = {U: tuple(names[U][t] for t in aF.values[U]) for U in C.objects}
    restr = {
        f: {names[U][t]: names[V][aF.restrictions[f][t]] for t in aF.values[U]}
        for f, (V, U) in C.arrows.items()
    }
    G = Presheaf(C, vals, restr, name=F.name and f"a({F.name})", check=False)
    unit = NatTrans(F, G, {U: {s: names[U][eta.components[U][s]] for s in F.values[U]} for U in C.objects}, check=False)
    return G, unit


def extend_along_unit(site: Site, eta: NatTrans, g: NatTrans) -> NatTrans:
    """The unique ``g#: a(F) -> H`` with ``g# . eta = g`` (``H`` a sheaf).

    Every section ``t`` of ``a(F)`` is locally in the image of ``eta``; ``g#``
    sends it to the amalgamation of the images under ``g`` of local preimages.
    """
    if eta.source is not g.source:
        raise ValueError("g must start at the source of the unit")
    aF, H = eta.target, g.target
    C = site.category
    pre = {U: {} for U in C.objects}
    for U in C.objects:
        for s in eta.source.values[U]:
            pre[U].setdefault(eta.components[U][s], s)
    comps = {}
    for U in C.objects:
        comp = {}
        for t in aF.values[U]:
            local = {}
            for phi in C.arrows_into(U):
                V = C.src(phi)
                s = pre[V].get(aF.restrictions[phi][t])
                if s is not None:
                    local[phi] = g.components[V][s]
            if Sieve(U, frozenset(local)) not in site.J[U]:
                raise InternalError("section of the sheafification is not locally in the image of the unit",
                                    {"object": U, "section": token_str(t)})
            cands = [h for h in H.values[U] if all(H.restrictions[phi][h] == y for phi, y in local.items())]
            if len(cands) != 1:
                raise NotASheaf("target of the extension is not a sheaf", {"object": U, "candidates": len(cands)})
            comp[t] = cands[0]
        comps[U] = comp
    return NatTrans(aF, H, comps, check=False)


def sheafify_morphism(site: Site, f: NatTrans, sF=None, sG=None) -> tuple[NatTrans, tuple, tuple]:
    """``a(f)`` together with the sheafifications of source and target."""
    sF = sF or sheafify(site, f.source)
    sG = sG or sheafify(site, f.target)
    af = extend_along_unit(site, sF[1], compose_nat(sG[1], f))
    return af, sF, sG


# -- coverings and closure --------------------------------------------------


def is_covering_family(site: Site, family: Iterable[str], U: str | None = None, cross_check: bool = True) -> bool:
    """Whether the family generates a covering sieve.

    For subcanonical sites the answer is cross-checked against the
    epimorphism test for the induced map of sheaves ``a(⊔ h_{U_i}) -> h_U``.
    """
    C = site.category
    family = list(family)
    R = sieve_generated_by(C, family, U)
    verdict = R in site.J[R.anchor]
    if cross_check and is_subcanonical(site):
        from .sheaves import is_epimorphism, sheaf_coproduct

        hU = yoneda(C, R.anchor)
        coprod = sheaf_coproduct(site, [yoneda(C, C.src(a)) for a in family])
        induced = coprod.copair(site, [yoneda_morphism(C, a) for a in family], hU)
        if bool(is_epimorphism(site, induced)) != verdict:
            raise InternalError("covering test disagrees with the epimorphism test", {"family": family})
    return verdict


def closure(site: Site, S: Subpresheaf) -> Subpresheaf:
    """J-closure: keep ``s`` iff ``{psi | s|psi in S}`` is a covering sieve."""
    G = S.parent
    C = site.category
    subs = {}
    for U in C.objects:
        keep = set()
        for s in G.values[U]:
            R = Sieve(U, frozenset(psi for psi in C.arrows_into(U) if G.restrictions[psi][s] in S.subsets[C.src(psi)]))
            if R in site.J[U]:
                keep.add(s)
        subs[U] = frozenset(keep)
    return Subpresheaf(G, subs, check=False)


def is_closed(site: Site, S: Subpresheaf) -> bool:
    return closure(site, S) == S
