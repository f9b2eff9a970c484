"""Finite categories with an explicit composition table.

Limits (terminal object, binary products, pullbacks) are found by brute
force: every candidate apex and projection pair is tried and the universal
property is checked by counting mediating arrows.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import product
from typing import Iterable, Mapping

from .errors import (
    CategoryError,
    IdentityLawBroken,
    MissingComposite,
    NonAssociative,
    UnknownArrow,
    UnknownObject,
)


@dataclass(frozen=True, eq=False)
class FiniteCategory:
    """A validated finite category.

    Build instances through :func:`validate_category` (or
    :func:`poset_category`); the constructor itself does not check laws.
    ``composition[(g, f)]`` is ``g . f`` for ``f: A -> B``, ``g: B -> C``.
    """

    objects: tuple[str, ...]
    arrows: Mapping[str, tuple[str, str]]
    identity: Mapping[str, str]
    composition: Mapping[tuple[str, str], str]

    def src(self, f: str) -> str:
        try:
            return self.arrows[f][0]
        except KeyError:
            raise UnknownArrow(f"unknown arrow {f!r}", f) from None

    def dst(self, f: str) -> str:
        try:
            return self.arrows[f][1]
        except KeyError:
            raise UnknownArrow(f"unknown arrow {f!r}", f) from None

    def compose(self, g: str, f: str) -> str:
        """``g . f`` (apply ``f`` first)."""
        return self.composition[(g, f)]

    def id(self, obj: str) -> str:
        try:
            return self.identity[obj]
        except KeyError:
            raise UnknownObject(f"unknown object {obj!r}", obj) from None

    def check_object(self, obj: str) -> None:
        if obj not in self._object_index:
            raise UnknownObject(f"unknown object {obj!r}", obj)

    @cached_property
    def _object_index(self) -> dict[str, int]:
        return {o: i for i, o in enumerate(self.objects)}

    @cached_property
    def arrow_index(self) -> dict[str, int]:
        return {a: i for i, a in enumerate(self.arrows)}

    @cached_property
    def _homs(self) -> dict[tuple[str, str], tuple[str, ...]]:
        homs: dict[tuple[str, str], list[str]] = {
            (a, b): [] for a in self.objects for b in self.objects
        }
        for f, (s, t) in self.arrows.items():
            homs[(s, t)].append(f)
        return {k: tuple(v) for k, v in homs.items()}

    def hom(self, a: str, b: str) -> tuple[str, ...]:
        try:
            return self._homs[(a, b)]
        except KeyError:
            bad = a if a not in self._object_index else b
            raise UnknownObject(f"unknown object {bad!r}", bad) from None

    @cached_property
    def _into(self) -> dict[str, tuple[str, ...]]:
        into: dict[str, list[str]] = {o: [] for o in self.objects}
        for f, (_, t) in self.arrows.items():
            into[t].append(f)
        return {k: tuple(v) for k, v in into.items()}

    @cached_property
    def _from(self) -> dict[str, tuple[str, ...]]:
        out: dict[str, list[str]] = {o: [] for o in self.objects}
        for f, (s, _) in self.arrows.items():
            out[s].append(f)
        return {k: tuple(v) for k, v in out.items()}

    def arrows_into(self, obj: str) -> tuple[str, ...]:
        self.check_object(obj)
        return self._into[obj]

    def arrows_from(self, obj: str) -> tuple[str, ...]:
        self.check_object(obj)
        return self._from[obj]

    def is_identity(self, f: str) -> bool:
        s, t = self.arrows[f]
        return s == t and self.identity[s] == f

    @cached_property
    def _inverses(self) -> dict[str, str]:
        inv = {}
        for f, (s, t) in self.arrows.items():
            for g in self.hom(t, s):
                if self.compose(g, f) == self.identity[s] and self.compose(f, g) == self.identity[t]:
                    inv[f] = g
                    break
        return inv

    def is_iso(self, f: str) -> bool:
        return f in self._inverses

    def inverse(self, f: str) -> str | None:
        return self._inverses.get(f)

    @cached_property
    def is_thin(self) -> bool:
        """True when every Hom-set has at most one element (a preorder)."""
        return all(len(h) <= 1 for h in self._homs.values())

    def __repr__(self) -> str:
        return f"FiniteCategory({len(self.objects)} objects, {len(self.arrows)} arrows)"


def validate_category(
    objects: Iterable[str],
    arrows: Iterable[tuple[str, str, str]],
    identity: Mapping[str, str] | None = None,
    compose: Mapping[tuple[str, str], str] | Iterable[tuple[str, str, str]] = (),
) -> FiniteCategory:
    """Check the category laws exhaustively and return the category.

    ``arrows`` holds ``(id, source, target)`` triples. ``identity`` maps each
    object to its identity arrow; when omitted, the arrow ``id_<obj>`` must
    exist. ``compose`` maps ``(g, f)`` to ``g . f`` (or is an iterable of
    ``(g, f, h)`` triples). Composites with an identity may be left out and
    are filled in by the identity laws; explicit entries that contradict
    them raise :class:`IdentityLawBroken`.
    """
    objects = tuple(objects)
    if len(set(objects)) != len(objects):
        raise CategoryError("duplicate object identifiers", objects)
    obj_set = set(objects)

    arrow_map: dict[str, tuple[str, str]] = {}
    for f, s, t in arrows:
        if f in arrow_map:
            raise CategoryError(f"duplicate arrow {f!r}", f)
        for o in (s, t):
            if o not in obj_set:
                raise UnknownObject(f"arrow {f!r} mentions unknown object {o!r}", o)
        arrow_map[f] = (s, t)

    if identity is None:
        identity = {o: f"id_{o}" for o in objects}
    identity = dict(identity)
    for o in objects:
        i = identity.get(o)
        if i is None:
            raise IdentityLawBroken(f"object {o!r} has no identity", {"object": o})
        if arrow_map.get(i) != (o, o):
            raise IdentityLawBroken(f"identity {i!r} of {o!r} is not an endo-arrow of {o!r}", {"object": o, "arrow": i})

    if isinstance(compose, Mapping):
        entries = [(g, f, h) for (g, f), h in compose.items()]
    else:
        entries = list(compose)
    table: dict[tuple[str, str], str] = {}
    for g, f, h in entries:
        for a in (g, f, h):
            if a not in arrow_map:
                raise UnknownArrow(f"composition mentions unknown arrow {a!r}", a)
        if arrow_map[f][1] != arrow_map[g][0]:
            raise CategoryError(f"{g} . {f} is not composable", {"g": g, "f": f})
        if arrow_map[h] != (arrow_map[f][0], arrow_map[g][1]):
            raise CategoryError(
                f"{g} . {f} = {h} has the wrong source/target", {"g": g, "f": f, "h": h}
            )
        if (g, f) in table and table[(g, f)] != h:
            raise CategoryError(f"{g} . {f} defined twice", {"g": g, "f": f})
        table[(g, f)] = h

    for f, (s, t) in arrow_map.items():
        for key, expected in (((identity[t], f), f), ((f, identity[s]), f)):
            got = table.setdefault(key, expected)
            if got != expected:
                raise IdentityLawBroken(
                    f"{key[0]} . {key[1]} = {got}, expected {expected}",
                    {"g": key[0], "f": key[1], "got": got, "expected": expected},
                )

    by_src: dict[str, list[str]] = {o: [] for o in objects}
    for f, (s, _) in arrow_map.items():
        by_src[s].append(f)
    for f, (_, t) in arrow_map.items():
        for g in by_src[t]:
            if (g, f) not in table:
                raise MissingComposite(f"missing composite {g} . {f}", {"g": g, "f": f})

    for f, (_, b) in arrow_map.items():
        for g in by_src[b]:
            gf = table[(g, f)]
            for h in by_src[arrow_map[g][1]]:
                if table[(h, gf)] != table[(table[(h, g)], f)]:
                    raise NonAssociative(
                        f"({h} . {g}) . {f} != {h} . ({g} . {f})", {"f": f, "g": g, "h": h}
                    )

    return FiniteCategory(objects, arrow_map, identity, table)


def poset_category(
    objects: Iterable[str], leq, arrow_name=None
) -> FiniteCategory:
    """The thin category of a finite preorder.

    ``leq(a, b)`` decides ``a <= b``; arrows are named ``id_a`` and
    ``i_a_b`` unless ``arrow_name(a, b)`` says otherwise.
    """
    objects = tuple(objects)
    if arrow_name is None:
        def arrow_name(a, b):
            return f"id_{a}" if a == b else f"i_{a}_{b}"
    arrows = []
    name = {}
    for a in objects:
        for b in objects:
            if a == b or leq(a, b):
                name[(a, b)] = arrow_name(a, b)
                arrows.append((name[(a, b)], a, b))
    compose = {}
    for (a, b), f in name.items():
        for (b2, c), g in name.items():
            if b2 == b:
                if (a, c) not in name:
                    raise CategoryError(f"relation is not transitive at {a} <= {b} <= {c}", (a, b, c))
                compose[(g, f)] = name[(a, c)]
    return validate_category(objects, arrows, {a: name[(a, a)] for a in objects}, compose)


# -- limits -----------------------------------------------------------------


@dataclass(frozen=True)
class ProductWitness:
    """Apex with projections; the empty family makes it a terminal object."""

    apex: str
    projections: tuple[str, ...]


@dataclass(frozen=True)
class PullbackWitness:
    apex: str
    p1: str
    p2: str
    f: str
    g: str


def _is_product(C: FiniteCategory, apex: str, projs: tuple[str, ...], factors: tuple[str, ...]) -> bool:
    for x in C.objects:
        legs = [C.hom(x, a) for a in factors]
        expected = 1
        for h in legs:
            expected *= len(h)
        mediators = C.hom(x, apex)
        if len(mediators) != expected:
            return False
        seen = {tuple(C.compose(p, m) for p in projs) for m in mediators}
        if len(seen) != expected:
            return False
    return True


def terminal_object(C: FiniteCategory) -> ProductWitness | None:
    for t in C.objects:
        if all(len(C.hom(x, t)) == 1 for x in C.objects):
            return ProductWitness(t, ())
    return None


def binary_product(C: FiniteCategory, a: str, b: str) -> ProductWitness | None:
    C.check_object(a)
    C.check_object(b)
    for p in C.objects:
        for p1 in C.hom(p, a):
            for p2 in C.hom(p, b):
                if _is_product(C, p, (p1, p2), (a, b)):
                    return ProductWitness(p, (p1, p2))
    return None


def _pullback_candidates(C: FiniteCategory, f: str, g: str):
    a, c = C.arrows[f]
    b, c2 = C.arrows[g]
    if c != c2:
        raise CategoryError(f"{f} and {g} do not share a target", {"f": f, "g": g})
    for p in C.objects:
        for p1 in C.hom(p, a):
            fp1 = C.compose(f, p1)
            for p2 in C.hom(p, b):
                if C.compose(g, p2) == fp1 and _is_pullback(C, p, p1, p2, f, g):
                    yield PullbackWitness(p, p1, p2, f, g)


def _is_pullback(C: FiniteCategory, p: str, p1: str, p2: str, f: str, g: str) -> bool:
    a = C.src(f)
    b = C.src(g)
    for x in C.objects:
        cones = [
            (u, v)
            for u in C.hom(x, a)
            for v in C.hom(x, b)
            if C.compose(f, u) == C.compose(g, v)
        ]
        mediators = C.hom(x, p)
        if len(mediators) != len(cones):
            return False
        if len({(C.compose(p1, m), C.compose(p2, m)) for m in mediators}) != len(cones):
            return False
    return True


def pullback(C: FiniteCategory, f: str, g: str) -> PullbackWitness | None:
    """A pullback of the cospan ``f: A -> X <- B: g``, or ``None``."""
    return next(_pullback_candidates(C, f, g), None)


def all_pullbacks(C: FiniteCategory, f: str, g: str) -> list[PullbackWitness]:
    """Every pullback square over the cospan (they are pairwise isomorphic)."""
    return list(_pullback_candidates(C, f, g))


def is_cartesian_arrow(C: FiniteCategory, f: str) -> bool:
    return all(pullback(C, f, g) is not None for g in C.arrows_into(C.dst(f)))


def is_mono_in_C(C: FiniteCategory, f: str) -> bool:
    a = C.src(f)
    for x in C.objects:
        hs = C.hom(x, a)
        if len({C.compose(f, u) for u in hs}) != len(hs):
            return False
    return True


def witnesses_isomorphic(C: FiniteCategory, w1, w2) -> str | None:
    """An isomorphism ``w1.apex -> w2.apex`` commuting with the legs, if any."""
    legs1 = w1.projections if isinstance(w1, ProductWitness) else (w1.p1, w1.p2)
    legs2 = w2.projections if isinstance(w2, ProductWitness) else (w2.p1, w2.p2)
    for m in C.hom(w1.apex, w2.apex):
        if C.is_iso(m) and all(C.compose(l2, m) == l1 for l1, l2 in zip(legs1, legs2)):
            return m
    return None


def has_all_pullbacks(C: FiniteCategory) -> tuple[str, str] | None:
    """``None`` if every cospan has a pullback, else the first bad cospan."""
    for c in C.objects:
        into = C.arrows_into(c)
        for f, g in product(into, repeat=2):
            if pullback(C, f, g) is None:
                return (f, g)
    return None
