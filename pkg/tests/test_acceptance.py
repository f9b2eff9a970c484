"""Acceptance criteria 1-9. Each criterion records one PASS/FAIL line,
printed in the terminal summary (see conftest.py)."""

from __future__ import annotations

import random
from itertools import combinations

import pytest

from _util import (
    INT,
    POINT,
    PT_CATEGORY,
    PT_COV,
    SIERP,
    all_maps,
    delete_object,
    random_sheaf,
    right_cancellable_on_sets,
)
from conftest import record
from geoctx.category import is_mono_in_C
from geoctx.dsl import fixture_names, parse, print_document, resolve_path
from geoctx.geometry import (
    context_from_finite_space,
    decompose,
    glue,
    gluing_data,
    is_elementary_scheme,
    is_open_immersion,
    is_P_morphism_of_sheaves,
    make_context,
    scheme_fibred_product,
    scheme_product,
    space_site,
    validate_geometric_context,
)
from geoctx.presheaf import (
    NatTrans,
    Presheaf,
    compose_nat,
    find_isomorphism,
    is_isomorphism,
    iter_nat_trans,
    product_presheaf,
    yoneda,
    yoneda_morphism,
)
from geoctx.sampling import random_nat_trans, random_presheaf
from geoctx.sheaves import (
    _image_by_closure,
    _image_by_pushout,
    image_factorization,
    is_epimorphism,
    is_monomorphism,
    sheaf_coproduct,
)
from geoctx.topology import Site, is_sheaf, sheafify
from test_cli import CASES, GOLDEN, output

GC = ("GC1", "GC2", "GC3", "GC4", "GC5", "GC6")
SPACES = {"point": POINT, "sierp": SIERP, "int": INT}


# -- 1. context validation --------------------------------------------------


def mutations(space):
    """Every mutation of each kind: (kind, label, C, cov, P)."""
    C, cov = space_site(space)
    P = frozenset(C.arrows)
    for U in C.objects:
        for k, fam in enumerate(cov[U]):
            yield "drop a cover", f"{U}#{k}", C, {**cov, U: [f for f in cov[U] if f != fam]}, P
        yield "drop a cover", f"{U}#all", C, {**cov, U: []}, P
    for n in (1, 2):
        for arrows in combinations(C.arrows, n):
            yield "remove a P-arrow", ",".join(arrows), C, cov, P - set(arrows)
    for U in C.objects:
        yield "delete an object", U, *delete_object(C, cov, P, U)


def single_flips(space):
    """``{kind: [(label, check, witness)]}`` for mutations flipping exactly one GC check."""
    out: dict[str, list] = {"drop a cover": [], "remove a P-arrow": [], "delete an object": []}
    for kind, label, C, cov, P in mutations(space):
        bad = [v for v in validate_geometric_context(C, P, cov=cov).verdicts if not v and v.check in GC]
        if len(bad) == 1 and bad[0].witness:
            out[kind].append((label, bad[0].check, bad[0].witness))
    return out


FLIPS = {name: single_flips(sp) for name, sp in SPACES.items()}
INFEASIBLE = [(name, kind) for name, flips in FLIPS.items() for kind, found in flips.items() if not found]


@pytest.mark.parametrize("name", SPACES)
def test_fixture_contexts_pass(name):
    ctx = context_from_finite_space(SPACES[name])
    assert len(ctx.verdicts) == 7 and all(ctx.verdicts)


def test_targeted_mutations_on_the_interval():
    flips = FLIPS["int"]
    # one representative per kind, each flipping exactly its target
    assert ("L#all", "GC6") in {(lab, c) for lab, c, _ in flips["drop a cover"]}
    assert ("i_XY_L", "GC4") in {(lab, c) for lab, c, _ in flips["remove a P-arrow"]}
    assert ("i_X_L", "GC3") in {(lab, c) for lab, c, _ in flips["remove a P-arrow"]}
    assert ("i_X_XY,i_X_L", "GC5") in {(lab, c) for lab, c, _ in flips["remove a P-arrow"]}
    assert ("X", "GC2") in {(lab, c) for lab, c, _ in flips["delete an object"]}
    # deleting the only object of the one-point category leaves no terminal object
    C0, cov0, P0 = delete_object(PT_CATEGORY, PT_COV, PT_CATEGORY.arrows, "pt")
    assert [v.check for v in validate_geometric_context(C0, P0, cov=cov0).verdicts if not v] == ["GC1"]


@pytest.mark.parametrize("name", sorted(f"neg_gc{k}.geo" for k in range(1, 7)))
def test_negative_fixtures_flip_their_check(name):
    from geoctx.dsl import load_file

    ws = load_file(name)
    bad = [v for v in ws.report.verdicts if not v and v.check in GC]
    assert [v.check for v in bad] == [f"GC{name[6]}"]
    assert bad[0].witness is not None


@pytest.mark.xfail(strict=True, reason="deleting any object of the point or Sierpinski space leaves a valid context")
def test_criterion_1():
    found = {(n, k): len(v) for n, f in FLIPS.items() for k, v in f.items()}
    ok = not INFEASIBLE
    record(1, ok, f"{sum(1 for v in found.values() if v)}/{len(found)} fixture x mutation-kind pairs have a "
                  f"single-flip mutation; none for {INFEASIBLE}")
    assert ok


# -- 2. sheafification ------------------------------------------------------


def nat_key(f: NatTrans):
    return tuple((U, tuple(sorted(f.components[U].items(), key=repr))) for U in f.source.category.objects)


def check_sheafification(site: Site, rng: random.Random) -> None:
    C = site.category
    F = random_presheaf(C, rng, 4)
    aF, eta = sheafify(site, F)
    assert is_sheaf(site, aF)
    assert find_isomorphism(sheafify(site, aF)[0], aF) is not None
    G = random_sheaf(site, rng, 2)
    lhs = {nat_key(compose_nat(g, eta)) for g in iter_nat_trans(aF, G)}
    rhs = {nat_key(h) for h in iter_nat_trans(F, G)}
    assert lhs == rhs and len(lhs) == sum(1 for _ in iter_nat_trans(aF, G))
    H = random_presheaf(C, rng, 3)
    aH = sheafify(site, H)[0]
    a_prod = sheafify(site, product_presheaf(F, H).apex)[0]
    assert find_isomorphism(a_prod, product_presheaf(aF, aH).apex) is not None


def test_criterion_2():
    rng = random.Random(2024)
    n = 0
    for space in (INT, SIERP):
        C, cov = space_site(space)
        site = Site.from_pretopology(C, cov)
        for _ in range(50):
            check_sheafification(site, rng)
            n += 1
    record(2, True, f"{n} random presheaves: sheaf, idempotent, adjunction, products")


# -- 3. epi oracle ----------------------------------------------------------


def test_criterion_3():
    site = Site.from_pretopology(PT_CATEGORY, PT_COV)
    n = agree = 0
    for a in range(4):
        for b in range(4):
            A = [f"a{i}" for i in range(a)]
            B = [f"b{i}" for i in range(b)]
            FA = Presheaf(PT_CATEGORY, {"pt": tuple(A)}, {"id_pt": {x: x for x in A}})
            FB = Presheaf(PT_CATEGORY, {"pt": tuple(B)}, {"id_pt": {x: x for x in B}})
            for m in all_maps(A, B):
                f = NatTrans(FA, FB, {"pt": m})
                n += 1
                agree += bool(is_epimorphism(site, f)) == right_cancellable_on_sets(m, A, B, 3)
    record(3, agree == n, f"{agree}/{n} morphisms agree with right-cancellation")
    assert agree == n


# -- 4 / 5. open immersions -------------------------------------------------

# fixture contexts, including admissible classes smaller than all arrows
CONTEXTS = [(SIERP, ()), (SIERP, ("i_S1_S",)), (INT, ()), (INT, ("i_XY_L", "i_X_L", "i_Y_L")), (INT, ("i_XY_L", "i_Y_L"))]


def build(space, drop):
    C, cov = space_site(space)
    return make_context(C, [a for a in C.arrows if a not in drop], cov=cov)


def test_criterion_4():
    n = agree = 0
    for space, drop in CONTEXTS:
        ctx = build(space, drop)
        C = ctx.category
        for a in C.arrows:
            n += 1
            agree += bool(is_open_immersion(ctx, yoneda_morphism(C, a))) == (a in ctx.P and is_mono_in_C(C, a))
    record(4, agree == n, f"{agree}/{n} arrows over {len(CONTEXTS)} contexts")
    assert agree == n


def test_criterion_5():
    n = agree = 0
    for space, drop in CONTEXTS:
        ctx = build(space, drop)
        site, C = ctx.site, ctx.category
        rng = random.Random(0)
        sheaves = [yoneda(C, U) for U in C.objects]
        sheaves.append(sheaf_coproduct(site, [yoneda(C, C.objects[1]), yoneda(C, C.objects[2])]).sheaf)
        sheaves += [random_sheaf(site, rng, 2) for _ in range(2)]
        for A in sheaves:
            for B in sheaves:
                for f in iter_nat_trans(A, B):
                    n += 1
                    lhs = bool(is_open_immersion(ctx, f))
                    rhs = bool(is_monomorphism(site, f)) and bool(is_P_morphism_of_sheaves(ctx, ctx.P, f))
                    agree += lhs == rhs
    record(5, agree == n and n >= 200, f"{agree}/{n} sheaf morphisms")
    assert n >= 200 and agree == n


# -- 6. image routes --------------------------------------------------------


def test_criterion_6():
    rng = random.Random(6)
    n = 0
    for space in (INT, SIERP):
        C, cov = space_site(space)
        site = Site.from_pretopology(C, cov)
        while n < (60 if space is INT else 120):
            X, Y = random_sheaf(site, rng), random_sheaf(site, rng)
            f = random_nat_trans(X, Y, rng)
            if f is None:
                continue
            n += 1
            A, B = _image_by_pushout(site, f), _image_by_closure(site, f)
            assert A.subsets == B.subsets
            im = image_factorization(site, f)
            if is_monomorphism(site, f):
                assert is_isomorphism(im.p)
            if is_epimorphism(site, f):
                assert all(im.subobject.subsets[U] == set(Y.values[U]) for U in C.objects)
    record(6, True, f"{n} random morphisms, both routes equal as subobjects")


# -- 7. gluing --------------------------------------------------------------


def test_criterion_7():
    ctx = context_from_finite_space(INT)
    C = ctx.category
    res = glue(ctx, gluing_data(ctx, ["L", "L"], {(0, 1): [("i_X_L", "i_X_L"), ("i_Y_L", "i_Y_L")]}))
    X = res.sheaf
    scheme = bool(is_elementary_scheme(ctx, X))
    not_rep = all(find_isomorphism(X, yoneda(C, U)) is None for U in C.objects)
    round_trip = find_isomorphism(glue(ctx, decompose(ctx, res.atlas)).sheaf, X) is not None
    two = glue(ctx, gluing_data(ctx, ["X", "XY"], {}))
    co = sheaf_coproduct(ctx.site, [yoneda(C, "X"), yoneda(C, "XY")]).sheaf
    coprod = find_isomorphism(two.sheaf, co) is not None
    ok = scheme and not_rep and round_trip and coprod
    record(7, ok, f"scheme={scheme} not_representable={not_rep} round_trip={round_trip} empty_overlap={coprod}")
    assert ok


# -- 8. closure properties --------------------------------------------------


def test_criterion_8():
    counts = {"products": 0, "coproducts": 0, "fibred": 0, "inclusions": 0}
    for space in (SIERP, INT):
        ctx = context_from_finite_space(space)
        site, C = ctx.site, ctx.category
        rng = random.Random(8)
        schemes = [yoneda(C, U) for U in C.objects]
        while len(schemes) < len(C.objects) + 3:
            X = random_sheaf(site, rng, 2)
            if is_elementary_scheme(ctx, X):
                schemes.append(X)
        for X in schemes:
            for Y in schemes[:4]:
                cone, _ = scheme_product(ctx, X, Y)
                assert is_elementary_scheme(ctx, cone.apex)
                counts["products"] += 1
        for k in range(0, 4):
            fam = schemes[k:k + 3]
            co = sheaf_coproduct(site, fam)
            assert is_elementary_scheme(ctx, co.sheaf)
            counts["coproducts"] += 1
            for inc in co.inclusions:
                assert is_open_immersion(ctx, inc)
                counts["inclusions"] += 1
        done = 0
        while done < 6:
            X, Y, Z = rng.choice(schemes), rng.choice(schemes), rng.choice(schemes)
            f, g = random_nat_trans(X, Z, rng), random_nat_trans(Y, Z, rng)
            if f is None or g is None:
                continue
            cone, _ = scheme_fibred_product(ctx, f, g)
            assert is_elementary_scheme(ctx, cone.apex)
            done += 1
            counts["fibred"] += 1
    record(8, True, ", ".join(f"{k}={v}" for k, v in counts.items()))


# -- 9. determinism ---------------------------------------------------------


def test_criterion_9():
    golden = sum(output(argv)[0] == output(argv)[0] == (GOLDEN / f"{name}.json").read_text(encoding="utf-8")
                 for name, argv, _ in CASES)
    corpus = list(fixture_names())
    rt = 0
    for name in corpus:
        doc = parse(resolve_path(name).read_text(encoding="utf-8"))
        text = print_document(doc)
        rt += parse(text) == doc and print_document(parse(text)) == text
    ok = golden == len(CASES) and rt == len(corpus)
    record(9, ok, f"{golden}/{len(CASES)} golden outputs identical, {rt}/{len(corpus)} documents round-trip")
    assert ok
