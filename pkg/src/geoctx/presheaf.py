"""Presheaves of finite sets, natural transformations, sieves and pointwise
(co)limits.

Sections ("tokens") are arbitrary hashable values. Engine-built presheaves
use tuples whose shape records the construction (``(i, x)`` for coproduct
components, ``(x, y)`` for product pairs and so on). Value sets are stored
as tuples; that order is the fixed total order used whenever a
deterministic choice is needed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Hashable, Iterable, Iterator, Mapping, Sequence

from .category import FiniteCategory
from .errors import (
    AnchorMismatch,
    ElementNotInValueSet,
    MixedTargets,
    NotAFunctor,
    NotNatural,
    ParentMismatch,
    UnknownObject,
)
from .report import token_str

Token = Hashable
_UNSET = object()


class Presheaf:
    """A contravariant functor ``C^op -> FinSet``.

    ``values[U]`` is the tuple of sections at ``U``; ``restrictions[f]`` for
    ``f: V -> U`` maps sections at ``U`` to sections at ``V``.
    """

    __slots__ = ("category", "values", "restrictions", "name", "__dict__")

    def __init__(
        self,
        category: FiniteCategory,
        values: Mapping[str, Sequence[Token]],
        restrictions: Mapping[str, Mapping[Token, Token]],
        name: str | None = None,
        check: bool = True,
    ):
        self.category = category
        self.values = {U: tuple(values.get(U, ())) for U in category.objects}
        for U in values:
            category.check_object(U)
        self.restrictions = {f: dict(restrictions.get(f, {})) for f in category.arrows}
        self.name = name
        if check:
            self._check()

    def _check(self) -> None:
        C = self.category
        for U, vals in self.values.items():
            if len(set(vals)) != len(vals):
                raise NotAFunctor(f"duplicate sections at {U}", {"object": U})
        for f, (V, U) in C.arrows.items():
            r = self.restrictions[f]
            target = self.index(V)
            for s in self.values[U]:
                if s not in r:
                    raise NotAFunctor(
                        f"restriction along {f} undefined on {token_str(s)}",
                        {"arrow": f, "section": token_str(s)},
                    )
                if r[s] not in target:
                    raise NotAFunctor(
                        f"restriction along {f} sends {token_str(s)} outside F({V})",
                        {"arrow": f, "section": token_str(s)},
                    )
            if C.is_identity(f) and any(r[s] != s for s in self.values[U]):
                raise NotAFunctor(f"identity {f} does not restrict to the identity", {"arrow": f})
        for f, (A, B) in C.arrows.items():
            for g in C.arrows_from(B):
                gf = C.compose(g, f)
                rf, rg, rgf = self.restrictions[f], self.restrictions[g], self.restrictions[gf]
                for s in self.values[C.dst(g)]:
                    if rgf[s] != rf[rg[s]]:
                        raise NotAFunctor(
                            f"restriction along {g} . {f} differs from the composite of restrictions",
                            {"g": g, "f": f, "section": token_str(s)},
                        )

    def value(self, U: str) -> tuple[Token, ...]:
        try:
            return self.values[U]
        except KeyError:
            raise UnknownObject(f"unknown object {U!r}", U) from None

    @cached_property
    def _index(self) -> dict[str, dict[Token, int]]:
        return {U: {s: i for i, s in enumerate(v)} for U, v in self.values.items()}

    def index(self, U: str) -> dict[Token, int]:
        return self._index[U]

    def restrict(self, f: str, s: Token) -> Token:
        return self.restrictions[f][s]

    def sizes(self) -> dict[str, int]:
        return {U: len(v) for U, v in self.values.items()}

    def find_token(self, U: str, rendered: str) -> Token:
        """The section at ``U`` whose rendering is ``rendered``."""
        for s in self.value(U):
            if token_str(s) == rendered:
                return s
        raise ElementNotInValueSet(f"no section {rendered!r} at {U}", {"object": U, "section": rendered})

    def __repr__(self) -> str:
        label = self.name or "Presheaf"
        return f"<{label} {self.sizes()}>"


def presheaf_from_tables(
    C: FiniteCategory,
    values: Mapping[str, Iterable[Token]],
    restrictions: Mapping[str, Mapping[Token, Token]],
    name: str | None = None,
) -> Presheaf:
    """Build a presheaf, filling in omitted restriction maps.

    Identities restrict to identities. A missing map along ``h`` is derived
    from any factorisation ``h = g . f`` whose two maps are known. The
    result is checked for functoriality.
    """
    vals = {U: tuple(values.get(U, ())) for U in C.objects}
    known: dict[str, dict[Token, Token]] = {}
    for f, r in restrictions.items():
        C.src(f)
        known[f] = dict(r)
    for U in C.objects:
        known.setdefault(C.id(U), {s: s for s in vals[U]})
    for f, (V, U) in C.arrows.items():
        if not vals[U]:
            known.setdefault(f, {})
    changed = True
    while changed:
        changed = False
        for f, (A, B) in C.arrows.items():
            if f not in known:
                continue
            for g in C.arrows_from(B):
                h = C.compose(g, f)
                if h in known or g not in known:
                    continue
                rf, rg = known[f], known[g]
                try:
                    known[h] = {s: rf[rg[s]] for s in vals[C.dst(g)]}
                except KeyError:
                    continue
                changed = True
    missing = [f for f in C.arrows if f not in known]
    if missing:
        raise NotAFunctor(f"no restriction map along {missing[0]}", {"arrow": missing[0]})
    return Presheaf(C, vals, known, name)


def presheaves_equal(F: Presheaf, G: Presheaf) -> bool:
    """Literal equality: same sections (as sets) and same restriction maps."""
    if F.category is not G.category:
        return False
    C = F.category
    if any(set(F.values[U]) != set(G.values[U]) for U in C.objects):
        return False
    return all(
        F.restrictions[f].get(s, _UNSET) == G.restrictions[f].get(s, _UNSET)
        for f, (_, U) in C.arrows.items()
        for s in F.values[U]
    )


# -- natural transformations --------------------------------------------------


class NatTrans:
    """A morphism of presheaves ``source -> target``."""

    __slots__ = ("source", "target", "components", "name")

    def __init__(
        self,
        source: Presheaf,
        target: Presheaf,
        components: Mapping[str, Mapping[Token, Token]],
        name: str | None = None,
        check: bool = True,
    ):
        if source.category is not target.category:
            raise NotNatural("source and target live over different categories")
        self.source = source
        self.target = target
        self.components = {U: dict(components.get(U, {})) for U in source.category.objects}
        self.name = name
        if check:
            self._check()

    @property
    def category(self) -> FiniteCategory:
        return self.source.category

    def _check(self) -> None:
        F, G = self.source, self.target
        for U in self.category.objects:
            comp = self.components[U]
            idx = G.index(U)
            for s in F.values[U]:
                if s not in comp:
                    raise NotNatural(f"component at {U} undefined on {token_str(s)}", {"object": U, "section": token_str(s)})
                if comp[s] not in idx:
                    raise NotNatural(f"component at {U} leaves G({U})", {"object": U, "section": token_str(s)})
        for f, (V, U) in self.category.arrows.items():
            for s in F.values[U]:
                if self.components[V][F.restrictions[f][s]] != G.restrictions[f][self.components[U][s]]:
                    raise NotNatural(
                        f"naturality fails along {f} at {token_str(s)}",
                        {"arrow": f, "section": token_str(s)},
                    )

    def __call__(self, U: str, s: Token) -> Token:
        return self.components[U][s]

    def is_injective(self) -> bool:
        return all(len(set(c.values())) == len(c) for c in self.components.values())

    def is_surjective(self) -> bool:
        return all(
            set(self.components[U].values()) == set(self.target.values[U])
            for U in self.category.objects
        )

    def key(self) -> tuple:
        """Hashable, order-independent description of the components."""
        return tuple(
            tuple(self.components[U][s] for s in self.source.values[U])
            for U in self.category.objects
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, NatTrans):
            return NotImplemented
        return (
            self.source is other.source
            and self.target is other.target
            and self.components == other.components
        )

    def __hash__(self) -> int:
        return hash((id(self.source), id(self.target), self.key()))

    def __repr__(self) -> str:
        return f"<NatTrans {self.name or ''} {self.source!r} -> {self.target!r}>"


def identity_nat(F: Presheaf) -> NatTrans:
    return NatTrans(F, F, {U: {s: s for s in F.values[U]} for U in F.category.objects}, check=False)


def compose_nat(g: NatTrans, f: NatTrans) -> NatTrans:
    """``g . f``."""
    if f.target is not g.source:
        raise NotNatural("morphisms are not composable")
    comps = {
        U: {s: g.components[U][f.components[U][s]] for s in f.source.values[U]}
        for U in f.category.objects
    }
    return NatTrans(f.source, g.target, comps, check=False)


def nat_trans_equal(f: NatTrans, g: NatTrans) -> bool:
    """Equality of parallel morphisms."""
    return all(
        f.components[U][s] == g.components[U][s]
        for U in f.category.objects
        for s in f.source.values[U]
    )


def _variable_order(C: FiniteCategory) -> list[str]:
    return sorted(C.objects, key=lambda U: (-len(C.arrows_into(U)), C.objects.index(U)))


def _search_nat_trans(
    F: Presheaf, G: Presheaf, injective: bool = False
) -> Iterator[dict[str, dict[Token, Token]]]:
    """Backtracking enumeration of natural transformations ``F -> G``.

    A chosen value at ``(U, a)`` fixes the values at every ``(V, F(f)(a))``
    for ``f: V -> U``; since every arrow into ``U`` (composites included) is
    visited, forced entries never need to propagate further. Yields the
    live component dicts; callers copy what they keep.
    """
    C = F.category
    variables = [(U, a) for U in _variable_order(C) for a in F.values[U]]
    comp: dict[str, dict[Token, Token]] = {U: {} for U in C.objects}
    used: dict[str, set] = {U: set() for U in C.objects}
    pushes = {
        U: [(f, C.src(f), F.restrictions[f], G.restrictions[f]) for f in C.arrows_into(U) if not C.is_identity(f)]
        for U in C.objects
    }

    def assign(U, a, b, trail) -> bool:
        cu = comp[U]
        if injective and b in used[U]:
            return False
        cu[a] = b
        trail.append((U, a))
        if injective:
            used[U].add(b)
        for _, V, rF, rG in pushes[U]:
            a2 = rF[a]
            b2 = rG[b]
            cur = comp[V].get(a2, _UNSET)
            if cur is _UNSET:
                if injective and b2 in used[V]:
                    return False
                comp[V][a2] = b2
                trail.append((V, a2))
                if injective:
                    used[V].add(b2)
            elif cur != b2:
                return False
        return True

    def undo(trail, mark):
        while len(trail) > mark:
            U, a = trail.pop()
            b = comp[U].pop(a)
            if injective:
                used[U].discard(b)

    trail: list = []
    n = len(variables)

    def rec(i):
        while i < n and variables[i][1] in comp[variables[i][0]]:
            i += 1
        if i == n:
            yield comp
            return
        U, a = variables[i]
        for b in G.values[U]:
            mark = len(trail)
            if assign(U, a, b, trail):
                yield from rec(i + 1)
            undo(trail, mark)

    yield from rec(0)


def iter_nat_trans(F: Presheaf, G: Presheaf, injective: bool = False) -> Iterator[NatTrans]:
    """All natural transformations ``F -> G`` in a deterministic order."""
    for comp in _search_nat_trans(F, G, injective):
        yield NatTrans(F, G, {U: dict(c) for U, c in comp.items()}, check=False)


def count_nat_trans(F: Presheaf, G: Presheaf) -> int:
    return sum(1 for _ in _search_nat_trans(F, G))


def find_isomorphism(F: Presheaf, G: Presheaf) -> NatTrans | None:
    """An isomorphism ``F -> G`` found by injective search, or ``None``."""
    C = F.category
    if G.category is not C:
        return None
    if any(len(F.values[U]) != len(G.values[U]) for U in C.objects):
        return None
    return next(iter_nat_trans(F, G, injective=True), None)


def is_isomorphism(f: NatTrans) -> bool:
    return f.is_injective() and f.is_surjective()


def inverse_nat(f: NatTrans) -> NatTrans:
    comps = {U: {b: a for a, b in c.items()} for U, c in f.components.items()}
    return NatTrans(f.target, f.source, comps, check=False)


# -- Yoneda -----------------------------------------------------------------


@lru_cache(maxsize=None)
def yoneda(C: FiniteCategory, U: str) -> Presheaf:
    """The representable presheaf ``h_U = Hom(-, U)``; sections are arrow ids."""
    C.check_object(U)
    values = {V: C.hom(V, U) for V in C.objects}
    restr = {
        f: {phi: C.compose(phi, f) for phi in values[C.dst(f)]}
        for f in C.arrows
    }
    return Presheaf(C, values, restr, name=f"h({U})", check=False)


def yoneda_morphism(C: FiniteCategory, phi: str) -> NatTrans:
    """``h_phi: h_A -> h_B`` for ``phi: A -> B`` (post-composition)."""
    A, B = C.arrows[phi]
    hA, hB = yoneda(C, A), yoneda(C, B)
    comps = {V: {u: C.compose(phi, u) for u in hA.values[V]} for V in C.objects}
    return NatTrans(hA, hB, comps, name=f"h({phi})", check=False)


def yoneda_correspond(F: Presheaf, U: str, s: Token) -> NatTrans:
    """The transformation ``h_U -> F`` sending ``Id_U`` to ``s``."""
    C = F.category
    if s not in F.index(U):
        raise ElementNotInValueSet(
            f"{token_str(s)} is not a section of F at {U}", {"object": U, "section": token_str(s)}
        )
    hU = yoneda(C, U)
    comps = {V: {phi: F.restrictions[phi][s] for phi in hU.values[V]} for V in C.objects}
    return NatTrans(hU, F, comps, check=False)


def yoneda_evaluate(eta: NatTrans, U: str) -> Token:
    """Inverse of :func:`yoneda_correspond`: evaluate at ``Id_U``."""
    return eta.components[U][eta.category.id(U)]


# -- sieves -----------------------------------------------------------------


@dataclass(frozen=True)
class Sieve:
    """A set of arrows into ``anchor`` closed under precomposition."""

    anchor: str
    arrows: frozenset[str]

    def __contains__(self, f: str) -> bool:
        return f in self.arrows

    def __len__(self) -> int:
        return len(self.arrows)

    def sorted_arrows(self, C: FiniteCategory) -> list[str]:
        return sorted(self.arrows, key=C.arrow_index.__getitem__)


def check_sieve(C: FiniteCategory, R: Sieve) -> None:
    for f in R.arrows:
        if C.dst(f) != R.anchor:
            raise AnchorMismatch(f"{f} does not target {R.anchor}", {"arrow": f, "anchor": R.anchor})
        for g in C.arrows_into(C.src(f)):
            if C.compose(f, g) not in R.arrows:
                raise NotAFunctor(
                    f"sieve not closed: {f} . {g} missing", {"arrow": f, "precomposed": g}
                )


def maximal_sieve(C: FiniteCategory, U: str) -> Sieve:
    return Sieve(U, frozenset(C.arrows_into(U)))


def empty_sieve(C: FiniteCategory, U: str) -> Sieve:
    C.check_object(U)
    return Sieve(U, frozenset())


def sieve_generated_by(C: FiniteCategory, family: Iterable[str], anchor: str | None = None) -> Sieve:
    """Smallest sieve containing ``family``: arrows factoring through a member."""
    family = list(family)
    targets = {C.dst(f) for f in family}
    if len(targets) > 1:
        raise MixedTargets(f"family targets several objects: {sorted(targets)}", {"targets": sorted(targets)})
    if anchor is None:
        if not targets:
            raise MixedTargets("cannot infer the anchor of an empty family", {})
        anchor = targets.pop()
    elif targets and targets != {anchor}:
        raise MixedTargets(f"family does not target {anchor}", {"anchor": anchor})
    arrows = set()
    for rho in family:
        for g in C.arrows_into(C.src(rho)):
            arrows.add(C.compose(rho, g))
    return Sieve(anchor, frozenset(arrows))


def pullback_sieve(C: FiniteCategory, phi: str, R: Sieve) -> Sieve:
    """``phi^{-1}(R) = { psi | phi . psi in R }`` for ``phi: U -> V``."""
    U, V = C.arrows[phi]
    if R.anchor != V:
        raise AnchorMismatch(f"sieve on {R.anchor} cannot be pulled back along {phi}: {U} -> {V}", {"arrow": phi, "anchor": R.anchor})
    return Sieve(U, frozenset(psi for psi in C.arrows_into(U) if C.compose(phi, psi) in R.arrows))


@lru_cache(maxsize=None)
def all_sieves(C: FiniteCategory, U: str) -> tuple[Sieve, ...]:
    """Every sieve on ``U``, smallest first, ties broken by arrow order."""
    principal = [sieve_generated_by(C, [f], U).arrows for f in C.arrows_into(U)]
    seen = {frozenset()}
    frontier = [frozenset()]
    while frontier:
        nxt = []
        for s in frontier:
            for p in principal:
                t = s | p
                if t not in seen:
                    seen.add(t)
                    nxt.append(t)
        frontier = nxt
    idx = C.arrow_index
    ordered = sorted(seen, key=lambda s: (len(s), sorted(idx[a] for a in s)))
    return tuple(Sieve(U, s) for s in ordered)


def sieve_generators(C: FiniteCategory, R: Sieve) -> list[str]:
    """A small generating family of ``R`` (greedy, deterministic)."""
    gens = R.sorted_arrows(C)
    for f in list(reversed(gens)):
        rest = [g for g in gens if g != f]
        if rest and sieve_generated_by(C, rest, R.anchor) == R:
            gens = rest
        elif not rest and not R.arrows:
            gens = rest
    return gens


@lru_cache(maxsize=None)
def sieve_presheaf(C: FiniteCategory, R: Sieve) -> Presheaf:
    """``R`` as a subpresheaf of ``h_U``; sections are the arrows of ``R``."""
    vals = {V: tuple(f for f in C.hom(V, R.anchor) if f in R.arrows) for V in C.objects}
    restr = {psi: {phi: C.compose(phi, psi) for phi in vals[C.dst(psi)]} for psi in C.arrows}
    return Presheaf(C, vals, restr, name=f"sieve({R.anchor})", check=False)


def sieve_to_subpresheaf(C: FiniteCategory, R: Sieve) -> "Subpresheaf":
    hU = yoneda(C, R.anchor)
    return Subpresheaf(hU, {V: frozenset(f for f in hU.values[V] if f in R.arrows) for V in C.objects})


def subpresheaf_to_sieve(S: "Subpresheaf") -> Sieve:
    """Inverse of :func:`sieve_to_subpresheaf` for subobjects of a representable."""
    F = S.parent
    if not (F.name or "").startswith("h("):
        raise ParentMismatch("parent is not a representable presheaf", {})
    anchor = F.name[2:-1]
    return Sieve(anchor, frozenset().union(*S.subsets.values()))


def matching_families(F: Presheaf, R: Sieve) -> Iterator[dict[str, Token]]:
    """Matching families ``(x_phi)_{phi in R}`` for ``F`` (= maps ``R -> F``)."""
    C = F.category
    SP = sieve_presheaf(C, R)
    for comp in _search_nat_trans(SP, F):
        yield {phi: comp[C.src(phi)][phi] for phi in R.arrows}


# -- subpresheaves ----------------------------------------------------------


class Subpresheaf:
    """Per-object subsets of a parent presheaf, stable under restriction."""

    __slots__ = ("parent", "subsets")

    def __init__(self, parent: Presheaf, subsets: Mapping[str, Iterable[Token]], check: bool = True):
        self.parent = parent
        self.subsets = {U: frozenset(subsets.get(U, ())) for U in parent.category.objects}
        if check:
            for U, sub in self.subsets.items():
                idx = parent.index(U)
                for s in sub:
                    if s not in idx:
                        raise ElementNotInValueSet(f"{token_str(s)} not in parent at {U}", {"object": U, "section": token_str(s)})
            for f, (V, U) in parent.category.arrows.items():
                for s in self.subsets[U]:
                    if parent.restrictions[f][s] not in self.subsets[V]:
                        raise NotAFunctor(
                            f"subset not stable along {f}", {"arrow": f, "section": token_str(s)}
                        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, Subpresheaf):
            return NotImplemented
        return self.parent is other.parent and self.subsets == other.subsets

    def __hash__(self):
        return hash((id(self.parent), tuple(sorted((U, len(s)) for U, s in self.subsets.items()))))

    def __le__(self, other: "Subpresheaf") -> bool:
        _same_parent(self, other)
        return all(self.subsets[U] <= other.subsets[U] for U in self.subsets)

    def as_presheaf(self, name: str | None = None) -> Presheaf:
        P = self.parent
        vals = {U: tuple(s for s in P.values[U] if s in self.subsets[U]) for U in P.category.objects}
        restr = {
            f: {s: P.restrictions[f][s] for s in vals[U]}
            for f, (_, U) in P.category.arrows.items()
        }
        return Presheaf(P.category, vals, restr, name=name, check=False)

    def inclusion(self, sub: Presheaf | None = None) -> NatTrans:
        sub = sub or self.as_presheaf()
        return NatTrans(sub, self.parent, {U: {s: s for s in sub.values[U]} for U in sub.category.objects}, check=False)

    def __repr__(self):
        return f"<Subpresheaf {{{', '.join(f'{U}: {len(s)}' for U, s in self.subsets.items())}}}>"


def _same_parent(*subs: Subpresheaf) -> None:
    for S in subs[1:]:
        if S.parent is not subs[0].parent:
            raise ParentMismatch("subobjects of different presheaves", {})


def subpresheaf_intersection(subs: Sequence[Subpresheaf]) -> Subpresheaf:
    _same_parent(*subs)
    P = subs[0].parent
    return Subpresheaf(
        P, {U: frozenset.intersection(*(S.subsets[U] for S in subs)) for U in P.category.objects}, check=False
    )


def subpresheaf_union_pointwise(parent: Presheaf, subs: Sequence[Subpresheaf]) -> Subpresheaf:
    _same_parent(Subpresheaf(parent, {}, check=False), *subs)
    return Subpresheaf(
        parent, {U: frozenset().union(*(S.subsets[U] for S in subs)) for U in parent.category.objects}, check=False
    )


def pointwise_image(f: NatTrans) -> Subpresheaf:
    return Subpresheaf(f.target, {U: frozenset(c.values()) for U, c in f.components.items()}, check=False)


def generated_subpresheaf(F: Presheaf, sections: Mapping[str, Iterable[Token]]) -> Subpresheaf:
    """Smallest subpresheaf containing the given sections."""
    C = F.category
    subs: dict[str, set] = {U: set() for U in C.objects}
    for U, ss in sections.items():
        for s in ss:
            if s not in F.index(U):
                raise ElementNotInValueSet(f"{token_str(s)} not a section at {U}", {"object": U, "section": token_str(s)})
            for f in C.arrows_into(U):
                subs[C.src(f)].add(F.restrictions[f][s])
    return Subpresheaf(F, subs, check=False)


# -- pointwise limits and colimits ------------------------------------------


@dataclass
class Diagram:
    """A finite diagram of presheaves: named nodes and morphisms between them."""

    nodes: dict[str, Presheaf]
    edges: list[tuple[str, str, NatTrans]] = field(default_factory=list)


@dataclass
class Cone:
    apex: Presheaf
    legs: dict[str, NatTrans]


def terminal_presheaf(C: FiniteCategory) -> Presheaf:
    return Presheaf(C, {U: ((),) for U in C.objects}, {f: {(): ()} for f in C.arrows}, name="1", check=False)


def initial_presheaf(C: FiniteCategory) -> Presheaf:
    return Presheaf(C, {}, {}, name="0", check=False)


def presheaf_limit(D: Diagram) -> Cone:
    """Pointwise limit: compatible tuples in the product of the nodes."""
    names = list(D.nodes)
    if not names:
        raise ValueError("empty diagram has no reference category; use terminal_presheaf")
    C = D.nodes[names[0]].category
    pos = {n: i for i, n in enumerate(names)}
    vals: dict[str, tuple] = {}
    for U in C.objects:
        tuples = [()]
        for n in names:
            tuples = [t + (x,) for t in tuples for x in D.nodes[n].values[U]]
            tuples = [t for t in tuples if _edges_ok(D.edges, pos, t, U, len(t))]
        vals[U] = tuple(tuples)
    restr = {
        f: {t: tuple(D.nodes[n].restrictions[f][x] for n, x in zip(names, t)) for t in vals[U]}
        for f, (_, U) in C.arrows.items()
    }
    apex = Presheaf(C, vals, restr, check=False)
    legs = {
        n: NatTrans(apex, D.nodes[n], {U: {t: t[i] for t in vals[U]} for U in C.objects}, check=False)
        for i, n in enumerate(names)
    }
    return Cone(apex, legs)


def _edges_ok(edges, pos, t, U, filled) -> bool:
    for a, b, m in edges:
        i, j = pos[a], pos[b]
        if i < filled and j < filled and m.components[U][t[i]] != t[j]:
            return False
    return True


def product_presheaf(F: Presheaf, G: Presheaf) -> Cone:
    return presheaf_limit(Diagram({"0": F, "1": G}))


def fibre_product_presheaf(f: NatTrans, g: NatTrans) -> Cone:
    """``F x_H G`` for ``f: F -> H <- G: g``; tokens are pairs ``(x, y)``."""
    if f.target is not g.target:
        raise NotNatural("cospan legs have different targets")
    F, G = f.source, g.source
    C = F.category
    vals = {
        U: tuple((x, y) for x in F.values[U] for y in G.values[U] if f.components[U][x] == g.components[U][y])
        for U in C.objects
    }
    restr = {
        h: {(x, y): (F.restrictions[h][x], G.restrictions[h][y]) for (x, y) in vals[U]}
        for h, (_, U) in C.arrows.items()
    }
    apex = Presheaf(C, vals, restr, check=False)
    legs = {
        "0": NatTrans(apex, F, {U: {t: t[0] for t in vals[U]} for U in C.objects}, check=False),
        "1": NatTrans(apex, G, {U: {t: t[1] for t in vals[U]} for U in C.objects}, check=False),
    }
    return Cone(apex, legs)


def equalizer_presheaf(f: NatTrans, g: NatTrans) -> Subpresheaf:
    F = f.source
    return Subpresheaf(
        F,
        {U: frozenset(s for s in F.values[U] if f.components[U][s] == g.components[U][s]) for U in F.category.objects},
        check=False,
    )


class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}
        self.rank = {x: i for i, x in enumerate(items)}

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        # least element (in enumeration order) stays the representative
        if self.rank[ra] < self.rank[rb]:
            self.parent[rb] = ra
        else:
            self.parent[ra] = rb


def presheaf_colimit(D: Diagram) -> Cone:
    """Pointwise colimit: quotient of the coproduct by the diagram edges.

    Tokens are ``(node index, section)``; each class is represented by its
    least member in (node order, section order). ``legs`` are the
    coprojections (a cocone, despite the field name).
    """
    names = list(D.nodes)
    if not names:
        raise ValueError("empty diagram has no reference category; use initial_presheaf")
    C = D.nodes[names[0]].category
    pos = {n: i for i, n in enumerate(names)}
    classes = {}
    vals = {}
    for U in C.objects:
        items = [(i, x) for i, n in enumerate(names) for x in D.nodes[n].values[U]]
        uf = _UnionFind(items)
        for a, b, m in D.edges:
            i, j = pos[a], pos[b]
            for x, y in m.components[U].items():
                uf.union((i, x), (j, y))
        classes[U] = {t: uf.find(t) for t in items}
        vals[U] = tuple(t for t in items if classes[U][t] == t)
    restr = {}
    for h, (V, U) in C.arrows.items():
        restr[h] = {
            (i, x): classes[V][(i, D.nodes[names[i]].restrictions[h][x])] for (i, x) in vals[U]
        }
    apex = Presheaf(C, vals, restr, check=False)
    legs = {
        n: NatTrans(D.nodes[n], apex, {U: {x: classes[U][(i, x)] for x in D.nodes[n].values[U]} for U in C.objects}, check=False)
        for i, n in enumerate(names)
    }
    return Cone(apex, legs)


def coproduct_presheaf(family: Sequence[Presheaf], C: FiniteCategory | None = None) -> Cone:
    if not family:
        if C is None:
            raise ValueError("empty coproduct needs the category")
        return Cone(initial_presheaf(C), {})
    return presheaf_colimit(Diagram({str(i): F for i, F in enumerate(family)}))


def coequalizer_presheaf(f: NatTrans, g: NatTrans) -> tuple[Presheaf, NatTrans]:
    """Pointwise coequalizer of ``f, g: F -> G``; tokens are those of ``G``."""
    G = f.target
    C = G.category
    classes = {}
    vals = {}
    for U in C.objects:
        uf = _UnionFind(list(G.values[U]))
        for s in f.source.values[U]:
            uf.union(f.components[U][s], g.components[U][s])
        classes[U] = {t: uf.find(t) for t in G.values[U]}
        vals[U] = tuple(t for t in G.values[U] if classes[U][t] == t)
    restr = {h: {s: classes[V][G.restrictions[h][s]] for s in vals[U]} for h, (V, U) in C.arrows.items()}
    Q = Presheaf(C, vals, restr, check=False)
    q = NatTrans(G, Q, classes, check=False)
    return Q, q


def copairing(legs: Sequence[NatTrans], cocone: Cone, target: Presheaf) -> NatTrans:
    """The map out of a coproduct cocone induced by ``legs`` (one per node)."""
    apex = cocone.apex
    C = apex.category
    comps = {U: {} for U in C.objects}
    for (name, inc), leg in zip(cocone.legs.items(), legs):
        for U in C.objects:
            for x, t in inc.components[U].items():
                comps[U][t] = leg.components[U][x]
    return NatTrans(apex, target, comps)


def pairing(f: NatTrans, g: NatTrans, cone: Cone) -> NatTrans:
    """The map into a binary product cone induced by ``f`` and ``g``."""
    apex = cone.apex
    C = apex.category
    comps = {U: {s: (f.components[U][s], g.components[U][s]) for s in f.source.values[U]} for U in C.objects}
    return NatTrans(f.source, apex, comps)

