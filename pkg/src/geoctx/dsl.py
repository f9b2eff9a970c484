"""The ``.geo`` text format.

One declaration per line; blocks open with ``{`` and hold one entry per
line (``;`` also separates entries). ``#`` starts a comment.

::

    space {
      points x m y
      open X = {x}
      open L = {x, m, y}
    }
    presheaf F {
      at L: {a, b}
      at X: {c}
      restrict i_X_L: a -> c, b -> c
    }
    morphism m: F -> G { at L: a -> a }
    glue PC {
      chart L
      chart L
      overlap (1, 2) = {(i_X_L, i_X_L), (i_Y_L, i_Y_L)}
    }

Explicit categories use ``object``, ``arrow f: A -> B`` and
``compose g . f = h``; every object gets an identity ``id_<object>``.
:func:`parse` builds an AST, :func:`print_document` is its canonical
printer and :func:`elaborate` turns the AST into engine objects.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterator

from .category import FiniteCategory, validate_category
from .errors import (
    DuplicateId,
    GeoError,
    GeoSyntaxError,
    InvalidContext,
    InvalidDocument,
    ResourceBoundExceeded,
    UnknownIdentifier,
)
from .geometry import (
    ContextReport,
    FiniteSpace,
    GeometricContext,
    GluingData,
    gluing_data,
    make_context,
    space_site,
    validate_geometric_context,
)
from .presheaf import NatTrans, Presheaf, presheaf_from_tables, presheaves_equal, yoneda, yoneda_morphism
from .topology import Site

MAX_OBJECTS = 8
MAX_ARROWS = 64
MAX_ELEMENTS = 64


# -- AST --------------------------------------------------------------------


@dataclass(frozen=True)
class Node:
    line: int = field(default=0, compare=False, kw_only=True)
    col: int = field(default=0, compare=False, kw_only=True)


@dataclass(frozen=True)
class ObjectDecl(Node):
    name: str


@dataclass(frozen=True)
class ArrowDecl(Node):
    name: str
    src: str
    dst: str


@dataclass(frozen=True)
class ComposeDecl(Node):
    g: str
    f: str
    h: str


@dataclass(frozen=True)
class OpenDecl(Node):
    name: str
    points: tuple[str, ...]


@dataclass(frozen=True)
class SpaceDecl(Node):
    points: tuple[str, ...]
    opens: tuple[OpenDecl, ...]


@dataclass(frozen=True)
class CoverDecl(Node):
    obj: str
    arrows: tuple[str, ...]


@dataclass(frozen=True)
class PDecl(Node):
    arrows: tuple[str, ...] | None  # None means every arrow


@dataclass(frozen=True)
class AtValues(Node):
    obj: str
    tokens: tuple[str, ...]


@dataclass(frozen=True)
class RestrictMap(Node):
    arrow: str
    pairs: tuple[tuple[str, str], ...]


@dataclass(frozen=True)
class PresheafDecl(Node):
    name: str
    values: tuple[AtValues, ...]
    maps: tuple[RestrictMap, ...]


@dataclass(frozen=True)
class YonedaPresheafDecl(Node):
    name: str
    obj: str


@dataclass(frozen=True)
class AtMap(Node):
    obj: str
    pairs: tuple[tuple[str, str], ...]


@dataclass(frozen=True)
class MorphismDecl(Node):
    name: str
    source: str
    target: str
    maps: tuple[AtMap, ...]


@dataclass(frozen=True)
class YonedaMorphismDecl(Node):
    name: str
    source: str
    target: str
    arrow: str


@dataclass(frozen=True)
class ChartDecl(Node):
    obj: str


@dataclass(frozen=True)
class OverlapDecl(Node):
    i: int
    j: int
    pairs: tuple[tuple[str, str], ...]


@dataclass(frozen=True)
class GlueDecl(Node):
    name: str | None
    charts: tuple[ChartDecl, ...]
    overlaps: tuple[OverlapDecl, ...]


@dataclass(frozen=True)
class Document:
    decls: tuple[Node, ...]


# -- lexer ------------------------------------------------------------------


@dataclass(frozen=True)
class Token:
    kind: str  # "id", "int", "nl", "eof" or the punctuation itself
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"(?P<comment>\#[^\n]*)|(?P<nl>[\n;])|(?P<ws>[ \t\r]+)|(?P<arrow>->)"
    r"|(?P<punct>[{}\[\]():,.=])|(?P<id>[A-Za-z0-9_][A-Za-z0-9_'+]*)"
)


def tokenize(text: str) -> list[Token]:
    out: list[Token] = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise GeoSyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        s = m.group()
        if kind == "nl":
            out.append(Token("nl", s, line, col))
            if s == "\n":
                line += 1
                line_start = m.end()
        elif kind == "arrow":
            out.append(Token("->", s, line, col))
        elif kind == "punct":
            out.append(Token(s, s, line, col))
        elif kind == "id":
            out.append(Token("int" if s.isdigit() else "id", s, line, col))
        pos = m.end()
    out.append(Token("eof", "", line, pos - line_start + 1))
    return out


# -- parser -----------------------------------------------------------------


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, what: str, tok: Token | None = None) -> GeoSyntaxError:
        tok = tok or self.tok
        got = "end of input" if tok.kind == "eof" else "end of line" if tok.kind == "nl" else repr(tok.text)
        return GeoSyntaxError(f"expected {what}, got {got}", tok.line, tok.col)

    def accept(self, kind: str) -> Token | None:
        if self.tok.kind == kind:
            t = self.tok
            self.i += 1
            return t
        return None

    def expect(self, kind: str, what: str | None = None) -> Token:
        t = self.accept(kind)
        if t is None:
            raise self.error(what or repr(kind))
        return t

    def ident(self, what: str = "an identifier") -> str:
        t = self.tok
        if t.kind in ("id", "int"):
            self.i += 1
            return t.text
        raise self.error(what)

    def keyword(self, word: str) -> None:
        if self.tok.kind == "id" and self.tok.text == word:
            self.i += 1
            return
        raise self.error(repr(word))

    def skip_nl(self) -> None:
        while self.tok.kind == "nl":
            self.i += 1

    def end_of_statement(self) -> None:
        if self.tok.kind not in ("nl", "eof"):
            raise self.error("end of line")

    def comma_list(self, close: str, item) -> list:
        out = []
        while not self.accept(close):
            if out:
                self.accept(",")
            if self.tok.kind == close:
                continue
            out.append(item())
        return out

    def token_set(self) -> tuple[str, ...]:
        self.expect("{")
        return tuple(self.comma_list("}", lambda: self.ident("a section token")))

    def mapsto(self) -> tuple[str, str]:
        a = self.ident("a section token")
        self.expect("->")
        return a, self.ident("a section token")

    def mapsto_list(self) -> tuple[tuple[str, str], ...]:
        if self.tok.kind in ("nl", "}", "eof"):
            return ()
        pairs = [self.mapsto()]
        while self.accept(","):
            pairs.append(self.mapsto())
        return tuple(pairs)

    def block(self, entry) -> None:
        self.expect("{")
        while True:
            self.skip_nl()
            if self.accept("}"):
                return
            entry()
            if self.tok.kind != "}":
                if self.tok.kind == "eof":
                    raise self.error("'}'")
                self.expect("nl", "end of line or '}'")

    # statements

    def document(self) -> Document:
        decls = []
        while True:
            self.skip_nl()
            if self.tok.kind == "eof":
                return Document(tuple(decls))
            decls.append(self.statement())
            self.end_of_statement()

    def statement(self) -> Node:
        t = self.tok
        if t.kind != "id":
            raise self.error("a declaration")
        handler = getattr(self, "_stmt_" + t.text, None)
        if handler is None:
            raise GeoSyntaxError(f"unknown declaration {t.text!r}", t.line, t.col)
        self.i += 1
        return handler(t.line, t.col)

    def _stmt_object(self, line, col):
        return ObjectDecl(self.ident("an object name"), line=line, col=col)

    def _stmt_arrow(self, line, col):
        name = self.ident("an arrow name")
        self.expect(":")
        s = self.ident("an object")
        self.expect("->")
        return ArrowDecl(name, s, self.ident("an object"), line=line, col=col)

    def _stmt_compose(self, line, col):
        g = self.ident("an arrow")
        self.expect(".")
        f = self.ident("an arrow")
        self.expect("=")
        return ComposeDecl(g, f, self.ident("an arrow"), line=line, col=col)

    def _stmt_space(self, line, col):
        points: list[str] | None = None
        opens: list[OpenDecl] = []

        def entry():
            nonlocal points
            t = self.tok
            word = self.ident("'points' or 'open'")
            if word == "points":
                if points is not None:
                    raise DuplicateId("points declared twice", t.line, t.col)
                points = []
                while self.tok.kind in ("id", "int"):
                    points.append(self.ident())
            elif word == "open":
                name = self.ident("an open name")
                self.expect("=")
                opens.append(OpenDecl(name, self.token_set(), line=t.line, col=t.col))
            else:
                raise GeoSyntaxError(f"expected 'points' or 'open', got {word!r}", t.line, t.col)

        self.block(entry)
        if points is None:
            raise GeoSyntaxError("space block without points", line, col)
        return SpaceDecl(tuple(points), tuple(opens), line=line, col=col)

    def _stmt_cover(self, line, col):
        obj = self.ident("an object")
        self.expect("=")
        self.expect("[")
        return CoverDecl(obj, tuple(self.comma_list("]", lambda: self.ident("an arrow"))), line=line, col=col)

    def _stmt_P(self, line, col):
        self.expect("=")
        if self.tok.kind == "id" and self.tok.text == "all":
            self.i += 1
            return PDecl(None, line=line, col=col)
        self.expect("[", "'[' or 'all'")
        return PDecl(tuple(self.comma_list("]", lambda: self.ident("an arrow"))), line=line, col=col)

    def _stmt_presheaf(self, line, col):
        name = self.ident("a presheaf name")
        if self.accept("="):
            self.keyword("yoneda")
            return YonedaPresheafDecl(name, self.ident("an object"), line=line, col=col)
        values: list[AtValues] = []
        maps: list[RestrictMap] = []

        def entry():
            t = self.tok
            word = self.ident("'at' or 'restrict'")
            if word == "at":
                obj = self.ident("an object")
                self.expect(":")
                values.append(AtValues(obj, self.token_set(), line=t.line, col=t.col))
            elif word == "restrict":
                arrow = self.ident("an arrow")
                self.expect(":")
                maps.append(RestrictMap(arrow, self.mapsto_list(), line=t.line, col=t.col))
            else:
                raise GeoSyntaxError(f"expected 'at' or 'restrict', got {word!r}", t.line, t.col)

        self.block(entry)
        return PresheafDecl(name, tuple(values), tuple(maps), line=line, col=col)

    def _stmt_morphism(self, line, col):
        name = self.ident("a morphism name")
        self.expect(":")
        src = self.ident("a presheaf")
        self.expect("->")
        dst = self.ident("a presheaf")
        if self.accept("="):
            self.keyword("yoneda")
            return YonedaMorphismDecl(name, src, dst, self.ident("an arrow"), line=line, col=col)
        maps: list[AtMap] = []

        def entry():
            t = self.tok
            self.keyword("at")
            obj = self.ident("an object")
            self.expect(":")
            maps.append(AtMap(obj, self.mapsto_list(), line=t.line, col=t.col))

        self.block(entry)
        return MorphismDecl(name, src, dst, tuple(maps), line=line, col=col)

    def _stmt_glue(self, line, col):
        name = self.ident() if self.tok.kind in ("id", "int") else None
        charts: list[ChartDecl] = []
        overlaps: list[OverlapDecl] = []

        def pair():
            self.expect("(")
            a = self.ident("an arrow")
            self.expect(",")
            b = self.ident("an arrow")
            self.expect(")")
            return a, b

        def entry():
            t = self.tok
            word = self.ident("'chart' or 'overlap'")
            if word == "chart":
                charts.append(ChartDecl(self.ident("an object"), line=t.line, col=t.col))
            elif word == "overlap":
                self.expect("(")
                i = int(self.expect("int", "a chart number").text)
                self.expect(",")
                j = int(self.expect("int", "a chart number").text)
                self.expect(")")
                self.expect("=")
                self.expect("{")
                pairs = tuple(self.comma_list("}", pair))
                overlaps.append(OverlapDecl(i, j, pairs, line=t.line, col=t.col))
            else:
                raise GeoSyntaxError(f"expected 'chart' or 'overlap', got {word!r}", t.line, t.col)

        self.block(entry)
        return GlueDecl(name, tuple(charts), tuple(overlaps), line=line, col=col)


def parse(text: str) -> Document:
    """Parse a document; the first syntax error is raised with its location."""
    return _Parser(text).document()


# -- printer ----------------------------------------------------------------


def _set(items) -> str:
    return "{" + ", ".join(items) + "}"


def _pairs(pairs) -> str:
    return ", ".join(f"{a} -> {b}" for a, b in pairs)


def _print_decl(d: Node) -> list[str]:
    if isinstance(d, ObjectDecl):
        return [f"object {d.name}"]
    if isinstance(d, ArrowDecl):
        return [f"arrow {d.name}: {d.src} -> {d.dst}"]
    if isinstance(d, ComposeDecl):
        return [f"compose {d.g} . {d.f} = {d.h}"]
    if isinstance(d, SpaceDecl):
        body = ["  points" + "".join(" " + p for p in d.points)]
        body += [f"  open {o.name} = {_set(o.points)}" for o in d.opens]
        return ["space {", *body, "}"]
    if isinstance(d, CoverDecl):
        return [f"cover {d.obj} = [{', '.join(d.arrows)}]"]
    if isinstance(d, PDecl):
        return ["P = all" if d.arrows is None else f"P = [{', '.join(d.arrows)}]"]
    if isinstance(d, PresheafDecl):
        body = [f"  at {v.obj}: {_set(v.tokens)}" for v in d.values]
        body += [f"  restrict {m.arrow}: {_pairs(m.pairs)}" for m in d.maps]
        return [f"presheaf {d.name} {{", *body, "}"]
    if isinstance(d, YonedaPresheafDecl):
        return [f"presheaf {d.name} = yoneda {d.obj}"]
    if isinstance(d, MorphismDecl):
        body = [f"  at {m.obj}: {_pairs(m.pairs)}" for m in d.maps]
        return [f"morphism {d.name}: {d.source} -> {d.target} {{", *body, "}"]
    if isinstance(d, YonedaMorphismDecl):
        return [f"morphism {d.name}: {d.source} -> {d.target} = yoneda {d.arrow}"]
    if isinstance(d, GlueDecl):
        body = [f"  chart {c.obj}" for c in d.charts]
        body += [f"  overlap ({o.i}, {o.j}) = " + _set(f"({a}, {b})" for a, b in o.pairs) for o in d.overlaps]
        head = "glue {" if d.name is None else f"glue {d.name} {{"
        return [head, *body, "}"]
    raise TypeError(f"not a declaration: {d!r}")


def print_document(doc: Document) -> str:
    """Canonical text; ``parse(print_document(d)) == d``."""
    return "".join(line + "\n" for d in doc.decls for line in _print_decl(d))


# -- elaboration ------------------------------------------------------------


def _unknown(kind: str, name: str, node: Node) -> UnknownIdentifier:
    return UnknownIdentifier(f"unknown {kind} {name!r}", node.line, node.col)


@dataclass
class Workspace:
    """Engine objects described by a document."""

    document: Document
    category: FiniteCategory
    cov: dict[str, list[frozenset[str]]]
    P: frozenset[str]
    presheaves: dict[str, Presheaf]
    morphisms: dict[str, NatTrans]
    gluings: dict[str, GlueDecl]
    space: FiniteSpace | None = None

    @cached_property
    def report(self) -> ContextReport:
        return validate_geometric_context(self.category, self.P, cov=self.cov)

    @property
    def site(self) -> Site:
        """The site, provided the covers form a pretopology."""
        if self.report.context is not None:
            return self.report.context.site
        v = self.report.verdict("site")
        if not v:
            raise InvalidContext(f"covers do not form a pretopology: {v.detail}", v.witness)
        return Site.from_pretopology(self.category, self.cov, check=False)

    @property
    def context(self) -> GeometricContext:
        if self.report.context is not None:
            return self.report.context
        return make_context(self.category, self.P, cov=self.cov)

    def gluing_data(self, name: str) -> GluingData:
        d = self.gluings[name]
        overlaps = {(o.i - 1, o.j - 1): list(o.pairs) for o in d.overlaps}
        return gluing_data(self.context, [c.obj for c in d.charts], overlaps)


class _Elaborator:
    def __init__(self, doc: Document):
        self.doc = doc
        self.names: dict[str, Node] = {}

    def claim(self, name: str, node: Node, kind: str) -> None:
        if name in self.names:
            prev = self.names[name]
            raise DuplicateId(f"{kind} {name!r} already declared on line {prev.line}", node.line, node.col)
        self.names[name] = node

    def run(self) -> Workspace:
        decls = self.doc.decls
        spaces = [d for d in decls if isinstance(d, SpaceDecl)]
        explicit = [d for d in decls if isinstance(d, (ObjectDecl, ArrowDecl, ComposeDecl))]
        if len(spaces) > 1:
            raise DuplicateId("space declared twice", spaces[1].line, spaces[1].col)
        if spaces and explicit:
            d = explicit[0]
            raise InvalidDocument("a space block cannot be combined with object/arrow/compose declarations", d.line, d.col)
        space = None
        if spaces:
            space, C, cov = self.space(spaces[0])
        else:
            C = self.category([d for d in decls if isinstance(d, (ObjectDecl, ArrowDecl, ComposeDecl))])
            cov = {U: [] for U in C.objects}
        for d in decls:
            if isinstance(d, CoverDecl):
                if d.obj not in C.objects:
                    raise _unknown("object", d.obj, d)
                for a in d.arrows:
                    if a not in C.arrows:
                        raise _unknown("arrow", a, d)
                    if C.dst(a) != d.obj:
                        raise InvalidDocument(f"arrow {a!r} does not end at {d.obj!r}", d.line, d.col)
                fam = frozenset(d.arrows)
                if fam not in cov[d.obj]:
                    cov[d.obj].append(fam)
        P = self.klass(C, [d for d in decls if isinstance(d, PDecl)])

        presheaves: dict[str, Presheaf] = {}
        morphisms: dict[str, NatTrans] = {}
        gluings: dict[str, GlueDecl] = {}
        for d in decls:
            if isinstance(d, (PresheafDecl, YonedaPresheafDecl)):
                self.claim(d.name, d, "presheaf")
                presheaves[d.name] = self.presheaf(C, d)
            elif isinstance(d, (MorphismDecl, YonedaMorphismDecl)):
                self.claim(d.name, d, "morphism")
                morphisms[d.name] = self.morphism(C, d, presheaves)
            elif isinstance(d, GlueDecl):
                name = d.name if d.name is not None else f"glue{len(gluings) + 1}"
                self.claim(name, d, "glue block")
                self.glue(C, d)
                gluings[name] = d
        return Workspace(self.doc, C, cov, P, presheaves, morphisms, gluings, space)

    def space(self, d: SpaceDecl):
        pts = d.points
        if len(set(pts)) != len(pts):
            dup = next(p for p in pts if pts.count(p) > 1)
            raise DuplicateId(f"point {dup!r} listed twice", d.line, d.col)
        opens: dict[str, frozenset[str]] = {}
        for o in d.opens:
            if o.name in opens:
                raise DuplicateId(f"open {o.name!r} already declared", o.line, o.col)
            for p in o.points:
                if p not in pts:
                    raise _unknown("point", p, o)
            opens[o.name] = frozenset(o.points)
        if frozenset() not in opens.values():
            name = "empty"
            while name in opens:
                name += "'"
            opens = {name: frozenset(), **opens}
        if len(opens) > MAX_OBJECTS:
            raise ResourceBoundExceeded(f"{len(opens)} opens exceed the bound of {MAX_OBJECTS} objects", d.line, d.col)
        space = FiniteSpace(tuple(pts), opens)
        try:
            C, cov = space_site(space)
        except GeoError as e:
            raise InvalidDocument(str(e), d.line, d.col) from e
        if len(C.arrows) > MAX_ARROWS:
            raise ResourceBoundExceeded(f"{len(C.arrows)} arrows exceed the bound of {MAX_ARROWS}", d.line, d.col)
        return space, C, {U: list(fams) for U, fams in cov.items()}

    def category(self, decls: list[Node]) -> FiniteCategory:
        objects: list[str] = []
        arrows: list[tuple[str, str, str]] = []
        known: dict[str, Node] = {}
        for d in decls:
            if isinstance(d, ObjectDecl):
                if d.name in known:
                    raise DuplicateId(f"object {d.name!r} already declared", d.line, d.col)
                known[d.name] = d
                objects.append(d.name)
        if len(objects) > MAX_OBJECTS:
            raise ResourceBoundExceeded(f"{len(objects)} objects exceed the bound of {MAX_OBJECTS}", decls[0].line, decls[0].col)
        ids = {U: f"id_{U}" for U in objects}
        for U, i in ids.items():
            arrows.append((i, U, U))
        arrow_names = set(ids.values())
        compose = []
        for d in decls:
            if isinstance(d, ArrowDecl):
                if d.name in arrow_names:
                    raise DuplicateId(f"arrow {d.name!r} already declared", d.line, d.col)
                for o in (d.src, d.dst):
                    if o not in known:
                        raise _unknown("object", o, d)
                arrow_names.add(d.name)
                arrows.append((d.name, d.src, d.dst))
                if len(arrows) > MAX_ARROWS:
                    raise ResourceBoundExceeded(f"more than {MAX_ARROWS} arrows", d.line, d.col)
        for d in decls:
            if isinstance(d, ComposeDecl):
                for a in (d.g, d.f, d.h):
                    if a not in arrow_names:
                        raise _unknown("arrow", a, d)
                compose.append((d.g, d.f, d.h))
        try:
            return validate_category(objects, arrows, ids, compose)
        except GeoError as e:
            node = decls[-1] if decls else Node()
            raise InvalidDocument(f"not a category: {e}", node.line, node.col) from e

    def klass(self, C: FiniteCategory, decls: list[PDecl]) -> frozenset[str]:
        if len(decls) > 1:
            raise DuplicateId("P declared twice", decls[1].line, decls[1].col)
        d = decls[0] if decls else PDecl(None)
        if d.arrows is None:
            return frozenset(C.arrows)
        for a in d.arrows:
            if a not in C.arrows:
                raise _unknown("arrow", a, d)
        return frozenset(d.arrows)

    def presheaf(self, C: FiniteCategory, d) -> Presheaf:
        if isinstance(d, YonedaPresheafDecl):
            if d.obj not in C.objects:
                raise _unknown("object", d.obj, d)
            F = yoneda(C, d.obj)
            return Presheaf(C, F.values, F.restrictions, name=d.name, check=False)
        values: dict[str, tuple[str, ...]] = {}
        for v in d.values:
            if v.obj not in C.objects:
                raise _unknown("object", v.obj, v)
            if v.obj in values:
                raise DuplicateId(f"values at {v.obj!r} given twice", v.line, v.col)
            if len(set(v.tokens)) != len(v.tokens):
                dup = next(t for t in v.tokens if v.tokens.count(t) > 1)
                raise DuplicateId(f"section {dup!r} listed twice", v.line, v.col)
            if len(v.tokens) > MAX_ELEMENTS:
                raise ResourceBoundExceeded(f"{len(v.tokens)} sections exceed the bound of {MAX_ELEMENTS}", v.line, v.col)
            values[v.obj] = v.tokens
        restr: dict[str, dict[str, str]] = {}
        for m in d.maps:
            if m.arrow not in C.arrows:
                raise _unknown("arrow", m.arrow, m)
            if m.arrow in restr:
                raise DuplicateId(f"restriction along {m.arrow!r} given twice", m.line, m.col)
            V, U = C.arrows[m.arrow]
            table = {}
            for a, b in m.pairs:
                if a not in values.get(U, ()):
                    raise UnknownIdentifier(f"section {a!r} is not declared at {U!r}", m.line, m.col)
                if b not in values.get(V, ()):
                    raise UnknownIdentifier(f"section {b!r} is not declared at {V!r}", m.line, m.col)
                if a in table:
                    raise DuplicateId(f"section {a!r} mapped twice", m.line, m.col)
                table[a] = b
            restr[m.arrow] = table
        try:
            return presheaf_from_tables(C, values, restr, name=d.name)
        except GeoError as e:
            raise InvalidDocument(f"presheaf {d.name}: {e}", d.line, d.col) from e

    def morphism(self, C: FiniteCategory, d, presheaves: dict[str, Presheaf]) -> NatTrans:
        for p in (d.source, d.target):
            if p not in presheaves:
                raise _unknown("presheaf", p, d)
        F, G = presheaves[d.source], presheaves[d.target]
        if isinstance(d, YonedaMorphismDecl):
            if d.arrow not in C.arrows:
                raise _unknown("arrow", d.arrow, d)
            h = yoneda_morphism(C, d.arrow)
            if not (presheaves_equal(F, h.source) and presheaves_equal(G, h.target)):
                raise InvalidDocument(
                    f"yoneda {d.arrow} needs yoneda {C.src(d.arrow)} -> yoneda {C.dst(d.arrow)}", d.line, d.col
                )
            return NatTrans(F, G, h.components, name=d.name, check=False)
        comps: dict[str, dict[str, str]] = {U: {} for U in C.objects}
        seen = set()
        for m in d.maps:
            if m.obj not in C.objects:
                raise _unknown("object", m.obj, m)
            if m.obj in seen:
                raise DuplicateId(f"component at {m.obj!r} given twice", m.line, m.col)
            seen.add(m.obj)
            for a, b in m.pairs:
                if a not in F.values[m.obj]:
                    raise UnknownIdentifier(f"section {a!r} is not in {d.source}({m.obj})", m.line, m.col)
                if b not in G.values[m.obj]:
                    raise UnknownIdentifier(f"section {b!r} is not in {d.target}({m.obj})", m.line, m.col)
                if a in comps[m.obj]:
                    raise DuplicateId(f"section {a!r} mapped twice", m.line, m.col)
                comps[m.obj][a] = b
        try:
            return NatTrans(F, G, comps, name=d.name)
        except GeoError as e:
            raise InvalidDocument(f"morphism {d.name}: {e}", d.line, d.col) from e

    def glue(self, C: FiniteCategory, d: GlueDecl) -> None:
        for c in d.charts:
            if c.obj not in C.objects:
                raise _unknown("object", c.obj, c)
        n = len(d.charts)
        seen = set()
        for o in d.overlaps:
            if not (1 <= o.i <= n and 1 <= o.j <= n):
                raise InvalidDocument(f"overlap ({o.i}, {o.j}) refers to a missing chart", o.line, o.col)
            if (o.i, o.j) in seen:
                raise DuplicateId(f"overlap ({o.i}, {o.j}) given twice", o.line, o.col)
            seen.add((o.i, o.j))
            for a, b in o.pairs:
                for x in (a, b):
                    if x not in C.arrows:
                        raise _unknown("arrow", x, o)


def elaborate(doc: Document) -> Workspace:
    """Resolve identifiers and build the category, covers, P and tables."""
    return _Elaborator(doc).run()


def load(text: str) -> Workspace:
    return elaborate(parse(text))


def explicit_document(C: FiniteCategory, cov, P) -> Document:
    """Explicit declarations for a site and class (identities implicit).

    The category must use ``id_<object>`` identities.
    """
    decls: list[Node] = [ObjectDecl(U) for U in C.objects]
    for U in C.objects:
        if C.id(U) != f"id_{U}":
            raise ValueError(f"identity of {U} is not named id_{U}")
    nonid = [a for a in C.arrows if not C.is_identity(a)]
    decls += [ArrowDecl(a, *C.arrows[a]) for a in nonid]
    decls += [ComposeDecl(g, f, C.compose(g, f)) for f in nonid for g in nonid if C.src(g) == C.dst(f)]
    index = C.arrow_index
    for U in C.objects:
        for fam in cov.get(U, ()):
            decls.append(CoverDecl(U, tuple(sorted(fam, key=index.__getitem__))))
    P = frozenset(P)
    arrows = None if P == frozenset(C.arrows) else tuple(a for a in C.arrows if a in P)
    decls.append(PDecl(arrows))
    return Document(tuple(decls))


FIXTURE_DIR = Path(__file__).parent / "fixtures"


def resolve_path(path: str | Path) -> Path:
    """``path`` itself, or the shipped fixture of that name."""
    p = Path(path)
    if p.exists():
        return p
    for cand in (FIXTURE_DIR / p, FIXTURE_DIR / p.name):
        if cand.exists():
            return cand
    raise FileNotFoundError(str(path))


def load_file(path: str | Path) -> Workspace:
    return load(resolve_path(path).read_text(encoding="utf-8"))


def fixture_names() -> Iterator[str]:
    return iter(sorted(p.name for p in FIXTURE_DIR.glob("*.geo")))
