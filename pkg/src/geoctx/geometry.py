"""Geometric contexts, open immersions, atlases, schemes and gluing.

Most definitions here are existential ("there exists a family of
P-arrows", "there exists an open atlas"). Each is decided by a single
maximal family: a family is covering (or jointly epimorphic) as soon as
some subfamily is, so a witness exists iff the family of *all* admissible
candidates works. Searches therefore only matter when a small witness is
wanted, and that search is what the budget bounds.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Mapping, Sequence

from .category import (
    FiniteCategory,
    all_pullbacks,
    binary_product,
    has_all_pullbacks,
    is_cartesian_arrow,
    poset_category,
    terminal_object,
)
from .errors import (
    GluingConditionViolated,
    InternalError,
    InvalidContext,
    NotAnOpenAtlas,
    NotATopology,
    PullbacksMissingInC,
    SearchBudgetExceeded,
)
from .presheaf import (
    Cone,
    Diagram,
    NatTrans,
    Presheaf,
    Sieve,
    Subpresheaf,
    compose_nat,
    fibre_product_presheaf,
    generated_subpresheaf,
    pointwise_image,
    presheaf_limit,
    sieve_generated_by,
    sieve_generators,
    yoneda,
    yoneda_correspond,
)
from .report import Verdict, token_str
from .sheaves import (
    EquivalenceRelation,
    check_equivalence_relation,
    is_monomorphism,
    quotient_by_relation,
    sheaf_coproduct,
)
from .topology import (
    Site,
    closure,
    is_sheaf,
    is_subcanonical,
    normalize_pretopology,
    topology_from_pretopology,
    validate_pretopology,
    validate_topology,
)

DEFAULT_BUDGET = 10_000


# -- admissible classes and contexts ----------------------------------------


def validate_admissible(C: FiniteCategory, P: Iterable[str]) -> Verdict:
    """Identities, stability under every cartesian square, and composition."""
    P = frozenset(P)
    for a in P:
        C.src(a)
    for U in C.objects:
        if C.id(U) not in P:
            return Verdict.fail("admissible", {"condition": "identities", "object": U}, f"identity of {U} is not in P")
    for phi in C.arrows:
        if phi not in P:
            continue
        for g in C.arrows_into(C.dst(phi)):
            for sq in all_pullbacks(C, phi, g):
                if sq.p2 not in P:
                    return Verdict.fail(
                        "admissible",
                        {"condition": "base change", "arrow": phi, "along": g, "apex": sq.apex, "base_change": sq.p2},
                        f"base change of {phi} along {g} is not in P",
                    )
    for f in C.arrows:
        if f not in P:
            continue
        for g in C.arrows_from(C.dst(f)):
            if g in P and C.compose(g, f) not in P:
                return Verdict.fail("admissible", {"condition": "composition", "f": f, "g": g, "composite": C.compose(g, f)},
                                    f"{g} . {f} is not in P")
    isos = sorted(a for a in C.arrows if C.is_iso(a))
    return Verdict.ok("admissible", detail="all isomorphisms lie in P", data={"isomorphisms": isos})


def _maximal_family_covers(site: Site, U: str, family: Iterable[str]) -> bool:
    return sieve_generated_by(site.category, list(family), U) in site.J[U]


def check_gc1(C: FiniteCategory) -> Verdict:
    if terminal_object(C) is None:
        return Verdict.fail("GC1", {"missing": "terminal object"}, "no terminal object")
    for i, A in enumerate(C.objects):
        for B in C.objects[i:]:
            if binary_product(C, A, B) is None:
                return Verdict.fail("GC1", {"missing": "product", "objects": [A, B]}, f"no product of {A} and {B}")
    return Verdict.ok("GC1")


def check_gc4(site: Site, P: frozenset[str]) -> Verdict:
    """J-locality: ``phi`` with a covering of P-arrows ``rho`` such that every
    ``phi . rho`` is in P must itself be in P."""
    C = site.category
    for phi, (U, V) in C.arrows.items():
        if phi in P:
            continue
        fam = [rho for rho in C.arrows_into(U) if rho in P and C.compose(phi, rho) in P]
        if _maximal_family_covers(site, U, fam):
            return Verdict.fail("GC4", {"arrow": phi, "covering": sieve_generators(C, sieve_generated_by(C, fam, U))},
                                f"{phi} is locally in P but not in P")
    return Verdict.ok("GC4")


def check_gc5(site: Site, P: frozenset[str]) -> Verdict:
    """Every covering sieve contains a covering family of P-arrows."""
    C = site.category
    for U in C.objects:
        for R in site.covering_sieves(U):
            fam = [a for a in R.sorted_arrows(C) if a in P]
            if not _maximal_family_covers(site, U, fam):
                return Verdict.fail("GC5", {"object": U, "covering": sieve_generators(C, R)},
                                    f"a covering of {U} has no P-refinement")
    return Verdict.ok("GC5")


def check_gc6(site: Site, P: frozenset[str]) -> Verdict:
    """Every P-arrow becomes cartesian on some covering of P-arrows."""
    C = site.category
    for phi, (U, V) in C.arrows.items():
        if phi not in P:
            continue
        fam = [rho for rho in C.arrows_into(U) if rho in P and is_cartesian_arrow(C, C.compose(phi, rho))]
        if not _maximal_family_covers(site, U, fam):
            return Verdict.fail("GC6", {"arrow": phi}, f"{phi} is not locally cartesian")
    return Verdict.ok("GC6")


@dataclass(frozen=True, eq=False)
class GeometricContext:
    """A validated triple ``(C, J, P)``; build it with :func:`make_context`."""

    site: Site
    P: frozenset[str]
    verdicts: tuple[Verdict, ...] = field(default=())

    def __post_init__(self):
        bad = [v for v in self.verdicts if not v]
        if bad or len(self.verdicts) != 7:
            raise InvalidContext("context does not pass all checks", [v.check for v in bad])

    @property
    def category(self) -> FiniteCategory:
        return self.site.category


@dataclass
class ContextReport:
    verdicts: list[Verdict]
    context: GeometricContext | None

    @property
    def passed(self) -> bool:
        return self.context is not None

    def verdict(self, check: str) -> Verdict:
        return next(v for v in self.verdicts if v.check == check)


def validate_geometric_context(
    C: FiniteCategory,
    P: Iterable[str],
    cov: Mapping[str, Iterable[Iterable[str]]] | None = None,
    J: Mapping[str, Iterable[Sieve]] | None = None,
) -> ContextReport:
    """The site check followed by GC1-GC6, each with its own verdict.

    Give either the generating pretopology ``cov`` or the topology ``J``.
    The site check (pretopology and topology axioms) is reported on its
    own; GC2-GC6 are evaluated against the generated ``J`` even when it
    fails, so that each verdict reflects only its own condition.
    """
    P = frozenset(P)
    if (cov is None) == (J is None):
        raise ValueError("give exactly one of cov or J")
    if cov is not None:
        cov = normalize_pretopology(C, cov)
        site_v = validate_pretopology(C, cov)
        if site_v:
            site_v = validate_topology(C, topology_from_pretopology(C, cov))
        # the covering-family form of the sheaf condition is only equivalent
        # to the sieve form for a valid pretopology
        site = Site(C, topology_from_pretopology(C, cov), cov if site_v else None)
    else:
        J = {U: frozenset(J.get(U, ())) for U in C.objects}
        site_v = validate_topology(C, J)
        site = Site(C, J, None)
    verdicts = [Verdict("site", site_v.status, site_v.witness, site_v.detail), check_gc1(C)]
    v = is_subcanonical(site)
    verdicts.append(Verdict("GC2", v.status, v.witness, v.detail))
    adm = validate_admissible(C, P)
    verdicts.append(Verdict("GC3", adm.status, adm.witness, adm.detail, adm.data))
    verdicts += [check_gc4(site, P), check_gc5(site, P), check_gc6(site, P)]
    ctx = GeometricContext(site, P, tuple(verdicts)) if all(verdicts) else None
    return ContextReport(verdicts, ctx)


def make_context(C: FiniteCategory, P: Iterable[str], cov=None, J=None) -> GeometricContext:
    report = validate_geometric_context(C, P, cov=cov, J=J)
    if report.context is None:
        bad = next(v for v in report.verdicts if not v)
        raise InvalidContext(f"{bad.check} fails: {bad.detail}", bad.witness)
    return report.context


# -- finite spaces ----------------------------------------------------------


@dataclass(frozen=True)
class FiniteSpace:
    """Points plus named open sets (``∅`` and the whole space included)."""

    points: tuple[str, ...]
    opens: Mapping[str, frozenset[str]]

    def check(self) -> None:
        pts = frozenset(self.points)
        sets = list(self.opens.values())
        names = {s: n for n, s in self.opens.items()}
        if len(names) != len(sets):
            raise NotATopology("two names for the same open set", {"opens": sorted(self.opens)})
        for n, s in self.opens.items():
            if not s <= pts:
                raise NotATopology(f"open {n} contains unknown points", {"open": n, "points": sorted(s - pts)})
        if frozenset() not in names:
            raise NotATopology("the empty set is not open", {"missing": []})
        if pts not in names:
            raise NotATopology("the whole space is not open", {"missing": sorted(pts)})
        for a in sets:
            for b in sets:
                for c, op in ((a | b, "union"), (a & b, "intersection")):
                    if c not in names:
                        raise NotATopology(
                            f"{op} of {names[a]} and {names[b]} is not open",
                            {"opens": [names[a], names[b]], op: sorted(c)},
                        )


def open_cover_pretopology(space: FiniteSpace, C: FiniteCategory) -> dict[str, list[frozenset[str]]]:
    """Every family of inclusions whose union is the target (the empty family
    covers the empty open)."""
    cov = {}
    for U in C.objects:
        into = list(C.arrows_into(U))
        fams = []
        for r in range(len(into) + 1):
            for fam in combinations(into, r):
                if frozenset().union(*(space.opens[C.src(a)] for a in fam)) == space.opens[U]:
                    fams.append(frozenset(fam))
        cov[U] = fams
    return cov


def space_site(space: FiniteSpace) -> tuple[FiniteCategory, dict]:
    space.check()
    names = list(space.opens)
    C = poset_category(names, lambda a, b: space.opens[a] <= space.opens[b])
    return C, open_cover_pretopology(space, C)


def context_from_finite_space(space: FiniteSpace) -> GeometricContext:
    """Opens ordered by inclusion, open covers, and every inclusion in P."""
    C, cov = space_site(space)
    return make_context(C, C.arrows, cov=cov)


# -- open immersions --------------------------------------------------------


def _fibre_over(f: NatTrans, U: str, g) -> tuple[Presheaf, NatTrans]:
    """``F x_G h_U`` for the section ``g`` of ``G`` at ``U``, with its map to ``h_U``."""
    cone = fibre_product_presheaf(f, yoneda_correspond(f.target, U, g))
    return cone.apex, cone.legs["1"]


def _p_generated(ctx: GeometricContext, U: str, S: Subpresheaf) -> tuple[bool, list[str]]:
    """Whether the subsheaf ``S`` of ``h_U`` is the closure of the sieve
    generated by the P-arrows it contains."""
    site = ctx.site
    C = site.category
    members = set().union(*S.subsets.values())
    fam = [phi for phi in C.arrows_into(U) if phi in ctx.P and phi in members]
    T = closure(site, Subpresheaf(S.parent, _sieve_subsets(C, sieve_generated_by(C, fam, U)), check=False))
    return T.subsets == S.subsets, fam


def _sieve_subsets(C: FiniteCategory, R: Sieve) -> dict[str, frozenset]:
    return {V: frozenset(a for a in C.hom(V, R.anchor) if a in R.arrows) for V in C.objects}


def is_open_immersion(ctx: GeometricContext, f: NatTrans) -> Verdict:
    """For every ``U`` and section ``g`` of the target: ``F x_G h_U -> h_U``
    must be mono with image generated (up to closure) by P-arrows."""
    site = ctx.site
    C = site.category
    G = f.target
    for U in C.objects:
        for g in G.values[U]:
            Pb, proj = _fibre_over(f, U, g)
            m = is_monomorphism(site, proj)
            if not m:
                V = m.witness["object"]
                z1, z2 = (next(z for z in Pb.values[V] if token_str(z) == s) for s in m.witness["sections"])
                return Verdict.fail(
                    "open-immersion",
                    {"object": U, "section": token_str(g), "reason": "not mono", "at": V,
                     "sections": [token_str(z1[0]), token_str(z2[0])], "arrow": token_str(z1[1])},
                    f"pullback to h({U}) is not a monomorphism",
                )
            S = closure(site, pointwise_image(proj))
            ok, fam = _p_generated(ctx, U, S)
            if not ok:
                return Verdict.fail(
                    "open-immersion",
                    {"object": U, "section": token_str(g), "reason": "image not generated by P-arrows", "p_arrows": fam},
                    f"image in h({U}) is not generated by P-arrows",
                )
    return Verdict.ok("open-immersion")


# -- atlases ----------------------------------------------------------------


@dataclass
class Atlas:
    """Charts ``h_{U_i} -> X`` given by sections ``(U_i, x_i)`` of ``X``."""

    target: Presheaf
    charts: list[tuple[str, object]]
    kind: str = "open"

    def morphisms(self) -> list[NatTrans]:
        return [yoneda_correspond(self.target, U, x) for U, x in self.charts]

    def to_json(self) -> list[dict]:
        return [{"object": U, "section": token_str(x)} for U, x in self.charts]


def _charts_epi(site: Site, X: Presheaf, charts: Sequence[tuple[str, object]]) -> bool:
    """Whether the chart images jointly cover ``X`` locally."""
    C = site.category
    union = generated_subpresheaf(X, _group(charts))
    return closure(site, union).subsets == {U: frozenset(X.values[U]) for U in C.objects}


def _group(charts):
    out: dict[str, list] = {}
    for U, x in charts:
        out.setdefault(U, []).append(x)
    return out


class _Budget:
    def __init__(self, limit: int):
        self.limit = limit
        self.used = 0

    def spend(self, what: str) -> None:
        self.used += 1
        if self.used > self.limit:
            raise SearchBudgetExceeded(f"search budget of {self.limit} exhausted while {what}", {"budget": self.limit})


def _candidate_charts(ctx, X, budget: _Budget, accept) -> list[tuple[str, object]]:
    out = []
    for V in ctx.category.objects:
        for x in X.values[V]:
            budget.spend("evaluating candidate charts")
            if accept(V, x):
                out.append((V, x))
    return out


def _minimize(site: Site, X: Presheaf, cands: list, budget: int) -> list:
    """Smallest jointly epimorphic subfamily (by size, then lexicographic);
    greedy pruning once ``budget`` subfamilies have been tried."""
    tried = 0
    for k in range(len(cands) + 1):
        for idx in combinations(range(len(cands)), k):
            tried += 1
            if tried > budget:
                fam = list(cands)
                for c in reversed(cands):
                    rest = [d for d in fam if d != c]
                    if _charts_epi(site, X, rest):
                        fam = rest
                return fam
            fam = [cands[i] for i in idx]
            if _charts_epi(site, X, fam):
                return fam
    raise InternalError("maximal chart family is epi but no subfamily is", {})


def find_open_atlas(ctx: GeometricContext, X: Presheaf, budget: int = DEFAULT_BUDGET, minimal: bool = True) -> Atlas | None:
    """An open atlas of ``X`` or ``None`` when there is none.

    ``None`` is exact: it means the family of all open-immersion charts is
    not jointly epimorphic.
    """
    B = _Budget(budget)
    cands = _candidate_charts(ctx, X, B, lambda V, x: bool(is_open_immersion(ctx, yoneda_correspond(X, V, x))))
    if not _charts_epi(ctx.site, X, cands):
        return None
    charts = _minimize(ctx.site, X, cands, budget) if minimal else cands
    return Atlas(X, charts, "open")


def find_atlas(ctx: GeometricContext, X: Presheaf, budget: int = DEFAULT_BUDGET, minimal: bool = True) -> Atlas | None:
    """An atlas (charts that are P-morphisms of sheaves) or ``None``."""
    B = _Budget(budget)

    def accept(V, x):
        return bool(is_P_morphism_of_sheaves(ctx, ctx.P, yoneda_correspond(X, V, x), budget))

    cands = _candidate_charts(ctx, X, B, accept)
    if not _charts_epi(ctx.site, X, cands):
        return None
    charts = _minimize(ctx.site, X, cands, budget) if minimal else cands
    return Atlas(X, charts, "atlas")


def is_elementary_scheme(ctx: GeometricContext, X: Presheaf, budget: int = DEFAULT_BUDGET, minimal: bool = True) -> Verdict:
    atlas = find_open_atlas(ctx, X, budget, minimal)
    if atlas is None:
        return Verdict.fail("scheme", {"reason": "open-immersion charts are not jointly epimorphic"}, "no open atlas")
    return Verdict.ok("scheme", {"atlas": atlas.to_json()}, data=atlas)


def is_geometric_sheaf(ctx: GeometricContext, X: Presheaf, budget: int = DEFAULT_BUDGET) -> Verdict:
    atlas = find_atlas(ctx, X, budget)
    if atlas is None:
        return Verdict.fail("geometric", {"reason": "P-morphism charts are not jointly epimorphic"}, "no atlas")
    return Verdict.ok("geometric", {"atlas": atlas.to_json()}, data=atlas)


def is_P_morphism_of_sheaves(ctx: GeometricContext, S: Iterable[str], f: NatTrans, budget: int = DEFAULT_BUDGET) -> Verdict:
    """For every ``U`` and section ``g`` of the target, ``F x_G h_U`` needs an
    open atlas whose charts induce arrows into ``U`` that lie in ``S``."""
    S = frozenset(S)
    C = ctx.category
    B = _Budget(budget)
    for U in C.objects:
        for g in f.target.values[U]:
            Pb, proj = _fibre_over(f, U, g)

            def accept(V, x, Pb=Pb, proj=proj):
                return proj.components[V][x] in S and bool(is_open_immersion(ctx, yoneda_correspond(Pb, V, x)))

            cands = _candidate_charts(ctx, Pb, B, accept)
            if not _charts_epi(ctx.site, Pb, cands):
                return Verdict.fail("p-morphism", {"object": U, "section": token_str(g),
                                                   "charts": [{"object": V, "section": token_str(x)} for V, x in cands]},
                                    f"the pullback to h({U}) has no open atlas over the class")
    return Verdict.ok("p-morphism")


def is_schematic_morphism(ctx: GeometricContext, f: NatTrans, budget: int = DEFAULT_BUDGET) -> Verdict:
    C = ctx.category
    for U in C.objects:
        for g in f.target.values[U]:
            Pb, _ = _fibre_over(f, U, g)
            if not is_elementary_scheme(ctx, Pb, budget, minimal=False):
                return Verdict.fail("schematic", {"object": U, "section": token_str(g)},
                                    f"the pullback to h({U}) is not an elementary scheme")
    return Verdict.ok("schematic")


def check_atlas(ctx: GeometricContext, atlas: Atlas) -> Verdict:
    for U, x in atlas.charts:
        v = is_open_immersion(ctx, yoneda_correspond(atlas.target, U, x))
        if not v:
            return Verdict.fail("atlas", {"chart": {"object": U, "section": token_str(x)}, **v.witness}, "chart is not an open immersion")
    if not _charts_epi(ctx.site, atlas.target, atlas.charts):
        return Verdict.fail("atlas", {"reason": "charts are not jointly epimorphic"}, "charts do not cover")
    return Verdict.ok("atlas")


# -- fibred products and base change ----------------------------------------


def scheme_fibred_product(
    ctx: GeometricContext, f: NatTrans, g: NatTrans, budget: int = DEFAULT_BUDGET
) -> tuple[Cone, Atlas]:
    """``X x_Z Y`` with an open atlas assembled from atlases of the chart
    pullbacks ``h_{U_i} x_Z h_{V_j}``."""
    C = ctx.category
    bad = has_all_pullbacks(C)
    if bad is not None:
        raise PullbacksMissingInC(f"no pullback of {bad[0]} and {bad[1]}", {"cospan": list(bad)})
    cone = fibre_product_presheaf(f, g)
    W = cone.apex
    ax = find_open_atlas(ctx, f.source, budget)
    ay = find_open_atlas(ctx, g.source, budget)
    if ax is None or ay is None:
        raise NotAnOpenAtlas("a factor is not an elementary scheme", {"factor": "X" if ax is None else "Y"})
    charts: list[tuple[str, object]] = []
    for (U, x), a in zip(ax.charts, ax.morphisms()):
        for (V, y), b in zip(ay.charts, ay.morphisms()):
            T = fibre_product_presheaf(compose_nat(f, a), compose_nat(g, b)).apex
            at = find_open_atlas(ctx, T, budget, minimal=False)
            if at is None:
                raise InternalError("chart pullback is not an elementary scheme", {"charts": [U, V]})
            for Wk, (alpha, beta) in at.charts:
                sec = (f.source.restrictions[alpha][x], g.source.restrictions[beta][y])
                if (Wk, sec) not in charts:
                    charts.append((Wk, sec))
    atlas = Atlas(W, charts, "open")
    v = check_atlas(ctx, atlas)
    if not v:
        raise InternalError("assembled fibred-product atlas fails verification", v.witness)
    return cone, atlas


def scheme_product(ctx: GeometricContext, X: Presheaf, Y: Presheaf, budget: int = DEFAULT_BUDGET) -> tuple[Cone, Atlas]:
    """Binary product as the fibred product over the terminal sheaf."""
    from .presheaf import terminal_presheaf

    T = terminal_presheaf(ctx.category)
    to_t = lambda Z: NatTrans(Z, T, {U: {s: () for s in Z.values[U]} for U in ctx.category.objects}, check=False)
    cone, atlas = scheme_fibred_product(ctx, to_t(X), to_t(Y), budget)
    return cone, atlas


def base_change_scheme(ctx: GeometricContext, f: NatTrans, p: NatTrans, budget: int = DEFAULT_BUDGET) -> tuple[Cone, Verdict]:
    """``X' = S' x_S X`` for schematic ``f: S' -> S`` and a scheme ``X``; the
    scheme verdict for ``X'`` is recomputed, not assumed."""
    if not is_schematic_morphism(ctx, f, budget):
        raise ValueError("f is not schematic")
    if not is_elementary_scheme(ctx, p.source, budget):
        raise ValueError("X is not an elementary scheme")
    cone = fibre_product_presheaf(f, p)
    return cone, is_elementary_scheme(ctx, cone.apex, budget)


# -- gluing -----------------------------------------------------------------


@dataclass
class GluingData:
    """Charts ``U_i`` and overlaps ``R_ij`` as subobjects of ``h_{U_i} x h_{U_j}``.

    ``products[(i, j)]`` is the product cone whose apex is the parent of
    ``overlaps[(i, j)]``; its tokens are pairs of arrows ``(a, b)``.
    """

    objects: list[str]
    overlaps: dict[tuple[int, int], Subpresheaf]
    products: dict[tuple[int, int], Cone]


def _chart_product(C: FiniteCategory, A: str, B: str) -> Cone:
    return presheaf_limit(Diagram({"0": yoneda(C, A), "1": yoneda(C, B)}))


def gluing_data(ctx: GeometricContext, objects: Sequence[str], overlaps: Mapping[tuple[int, int], Iterable[tuple[str, str]]]) -> GluingData:
    """Build gluing data from generating pairs.

    Each ``R_ij`` is the closure of the subobject generated by the listed
    pairs. Unlisted ``(i, i)`` default to the diagonal; an unlisted ``(j, i)``
    is the transpose of ``(i, j)``; anything else is the initial subsheaf.
    """
    C = ctx.category
    objects = list(objects)
    for U in objects:
        C.check_object(U)
    n = len(objects)
    products = {(i, j): _chart_product(C, objects[i], objects[j]) for i in range(n) for j in range(n)}
    subs: dict[tuple[int, int], Subpresheaf] = {}
    given = {k: list(v) for k, v in overlaps.items()}
    for (i, j), pairs in given.items():
        if not (0 <= i < n and 0 <= j < n):
            raise GluingConditionViolated("a", f"overlap index ({i + 1},{j + 1}) out of range", {"pair": [i + 1, j + 1]})
        apex = products[(i, j)].apex
        gens: dict[str, list] = {}
        for a, b in pairs:
            V = C.src(a)
            if C.src(b) != V or C.dst(a) != objects[i] or C.dst(b) != objects[j]:
                raise GluingConditionViolated("b", f"({a},{b}) is not a section of h({objects[i]}) x h({objects[j]})",
                                              {"pair": [i + 1, j + 1], "section": [a, b]})
            gens.setdefault(V, []).append((a, b))
        subs[(i, j)] = closure(ctx.site, generated_subpresheaf(apex, gens))
    for i in range(n):
        for j in range(n):
            if (i, j) in subs:
                continue
            apex = products[(i, j)].apex
            if (j, i) in given:
                subs[(i, j)] = Subpresheaf(apex, {V: frozenset((b, a) for a, b in s) for V, s in subs[(j, i)].subsets.items()}, check=False)
            elif i == j:
                subs[(i, j)] = Subpresheaf(apex, {V: frozenset((a, a) for a in C.hom(V, objects[i])) for V in C.objects}, check=False)
            else:
                # the initial subsheaf, not the empty subpresheaf
                subs[(i, j)] = closure(ctx.site, Subpresheaf(apex, {}, check=False))
    return GluingData(objects, subs, products)


@dataclass
class GluingResult:
    sheaf: Presheaf
    atlas: Atlas
    quotient: NatTrans
    relation: EquivalenceRelation
    coproduct: Presheaf


def _restrict_leg(sub: Presheaf, leg: NatTrans) -> NatTrans:
    C = sub.category
    return NatTrans(sub, leg.target, {U: {z: leg.components[U][z] for z in sub.values[U]} for U in C.objects}, check=False)


def glue(ctx: GeometricContext, data: GluingData) -> GluingResult:
    """Quotient of ``⊔ h_{U_i}`` by the relation assembled from the overlaps,
    after checking conditions (a)-(d)."""
    site = ctx.site
    C = site.category
    n = len(data.objects)
    reps = [yoneda(C, U) for U in data.objects]
    Xc = sheaf_coproduct(site, reps)
    X = Xc.sheaf

    keys = [(i, j) for i in range(n) for j in range(n)]
    pieces, legs1, legs2 = [], [], []
    for i, j in keys:
        S = data.overlaps[(i, j)]
        Rij = S.as_presheaf(name=f"R{i + 1}{j + 1}")
        v = is_sheaf(site, Rij)
        if not v:
            raise GluingConditionViolated("b", f"R{i + 1}{j + 1} is not a subsheaf", {"pair": [i + 1, j + 1], **v.witness})
        cone = data.products[(i, j)]
        p1, p2 = _restrict_leg(Rij, cone.legs["0"]), _restrict_leg(Rij, cone.legs["1"])
        oi = is_open_immersion(ctx, p1)
        if not oi:
            raise GluingConditionViolated("b", f"R{i + 1}{j + 1} -> h({data.objects[i]}) is not an open immersion",
                                          {"pair": [i + 1, j + 1], **oi.witness})
        if i == j:
            for V in C.objects:
                diag = frozenset((a, a) for a in C.hom(V, data.objects[i]))
                if S.subsets[V] != diag:
                    extra = sorted(map(token_str, S.subsets[V] ^ diag))
                    raise GluingConditionViolated("c", f"R{i + 1}{i + 1} is not the diagonal", {"pair": [i + 1, i + 1], "object": V, "sections": extra})
        pieces.append(Rij)
        legs1.append(compose_nat(Xc.inclusions[i], p1))
        legs2.append(compose_nat(Xc.inclusions[j], p2))

    Rc = sheaf_coproduct(site, pieces)
    R = Rc.sheaf
    r1 = Rc.copair(site, legs1, X)
    r2 = Rc.copair(site, legs2, X)
    rel = EquivalenceRelation(R, X, r1, r2)

    # (b) cartesian squares: over each (a, b) in h_Ui x h_Uj, the fibre of
    # (r1, r2) has one point if (a, b) is in R_ij and none otherwise.
    for k, (i, j) in enumerate(keys):
        S = data.overlaps[(i, j)]
        for V in C.objects:
            counts: dict[tuple, int] = {}
            for z in R.values[V]:
                key = (r1.components[V][z], r2.components[V][z])
                counts[key] = counts.get(key, 0) + 1
            for a, b in data.products[(i, j)].apex.values[V]:
                key = (Xc.inclusions[i].components[V][a], Xc.inclusions[j].components[V][b])
                want = 1 if (a, b) in S.subsets[V] else 0
                if counts.get(key, 0) != want:
                    raise GluingConditionViolated("b", f"square for R{i + 1}{j + 1} is not cartesian",
                                                  {"pair": [i + 1, j + 1], "object": V, "section": [a, b]})

    ev = check_equivalence_relation(site, rel)
    if not ev:
        raise GluingConditionViolated("d", f"overlaps do not form an equivalence relation ({ev.witness['condition']})", ev.witness)
    Q, q = quotient_by_relation(site, rel)
    charts = []
    for i, U in enumerate(data.objects):
        sec = q.components[U][Xc.inclusions[i].components[U][C.id(U)]]
        charts.append((U, sec))
    atlas = Atlas(Q, charts, "open")
    v = check_atlas(ctx, atlas)
    if not v:
        raise InternalError("glued charts do not form an open atlas", v.witness)
    return GluingResult(Q, atlas, q, rel, X)


def decompose(ctx: GeometricContext, atlas: Atlas) -> GluingData:
    """``R_ij = h_{U_i} x_X h_{U_j}`` as subobjects of ``h_{U_i} x h_{U_j}``."""
    v = check_atlas(ctx, atlas)
    if not v:
        raise NotAnOpenAtlas(v.detail, v.witness)
    X = atlas.target
    C = ctx.category
    objs = [U for U, _ in atlas.charts]
    n = len(objs)
    products = {(i, j): _chart_product(C, objs[i], objs[j]) for i in range(n) for j in range(n)}
    subs = {}
    for i, (Ui, xi) in enumerate(atlas.charts):
        for j, (Uj, xj) in enumerate(atlas.charts):
            apex = products[(i, j)].apex
            subs[(i, j)] = Subpresheaf(
                apex,
                {V: frozenset((a, b) for a, b in apex.values[V]
                              if X.restrictions[a][xi] == X.restrictions[b][xj]) for V in C.objects},
                check=False,
            )
    return GluingData(objs, subs, products)


def overlap_generators(ctx: GeometricContext, data: GluingData) -> dict[tuple[int, int], list[tuple[str, str]]]:
    """Small generating sets of pairs for each overlap (used for printing)."""
    C = ctx.category
    out = {}
    for (i, j), S in data.overlaps.items():
        gens: list[tuple[str, str]] = []
        covered: set = set()
        for V in sorted(C.objects, key=lambda V: -len(C.arrows_into(V))):
            for t in sorted(S.subsets[V], key=token_str):
                if (V, t) in covered:
                    continue
                gens.append(t)
                apex = S.parent
                for phi in C.arrows_into(V):
                    covered.add((C.src(phi), apex.restrictions[phi][t]))
        out[(i, j)] = gens
    return out
