from __future__ import annotations

import random
from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _util import INT, PT_CATEGORY, SIERP, all_maps
from geoctx.errors import AnchorMismatch, ElementNotInValueSet, MixedTargets, NotAFunctor, NotNatural
from geoctx.geometry import space_site
from geoctx.presheaf import (
    NatTrans,
    Presheaf,
    Subpresheaf,
    all_sieves,
    check_sieve,
    coequalizer_presheaf,
    compose_nat,
    coproduct_presheaf,
    count_nat_trans,
    empty_sieve,
    equalizer_presheaf,
    fibre_product_presheaf,
    find_isomorphism,
    generated_subpresheaf,
    identity_nat,
    initial_presheaf,
    iter_nat_trans,
    matching_families,
    maximal_sieve,
    nat_trans_equal,
    pointwise_image,
    presheaf_from_tables,
    presheaves_equal,
    product_presheaf,
    pullback_sieve,
    sieve_generated_by,
    sieve_generators,
    sieve_to_subpresheaf,
    subpresheaf_to_sieve,
    terminal_presheaf,
    yoneda,
    yoneda_correspond,
    yoneda_evaluate,
    yoneda_morphism,
)
from geoctx.sampling import random_nat_trans, random_presheaf

C_INT = space_site(INT)[0]
C_SIERP = space_site(SIERP)[0]
seeds = st.integers(0, 10_000)


def brute_force_nat_count(F: Presheaf, G: Presheaf) -> int:
    C = F.category
    per_obj = [list(all_maps(F.values[U], G.values[U])) for U in C.objects]
    n = 0
    for choice in product(*per_obj):
        comp = dict(zip(C.objects, choice))
        if all(comp[C.src(f)][F.restrictions[f][s]] == G.restrictions[f][comp[C.dst(f)][s]]
               for f in C.arrows for s in F.values[C.dst(f)]):
            n += 1
    return n


def test_representables():
    assert yoneda(PT_CATEGORY, "pt").sizes() == {"pt": 1}
    hL = yoneda(C_INT, "L")
    assert set(hL.sizes().values()) == {1}
    assert yoneda(C_INT, "X").values["Y"] == ()


def test_yoneda_identity_and_round_trip():
    hU = yoneda(C_INT, "XY")
    eta = yoneda_correspond(hU, "XY", "id_XY")
    assert nat_trans_equal(eta, identity_nat(hU))
    rng = random.Random(3)
    for C in (C_INT, C_SIERP, PT_CATEGORY):
        F = random_presheaf(C, rng, 3)
        for U in C.objects:
            for s in F.values[U]:
                assert yoneda_evaluate(yoneda_correspond(F, U, s), U) == s


def test_yoneda_count_on_sierpinski():
    rng = random.Random(7)
    F = random_presheaf(C_SIERP, rng, 3)
    while max(F.sizes().values()) < 3:
        F = random_presheaf(C_SIERP, rng, 3)
    for U in C_SIERP.objects:
        assert count_nat_trans(yoneda(C_SIERP, U), F) == len(F.values[U])


def test_yoneda_correspond_rejects_foreign_section():
    with pytest.raises(ElementNotInValueSet):
        yoneda_correspond(yoneda(C_INT, "L"), "L", "nope")


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_nat_trans_enumeration_matches_brute_force(seed):
    rng = random.Random(seed)
    F = random_presheaf(C_SIERP, rng, 2)
    G = random_presheaf(C_SIERP, rng, 3)
    assert count_nat_trans(F, G) == brute_force_nat_count(F, G)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_composition_is_natural_and_associative(seed):
    rng = random.Random(seed)
    F, G, H = (random_presheaf(C_INT, rng, 3) for _ in range(3))
    f, g = random_nat_trans(F, G, rng), random_nat_trans(G, H, rng)
    if f is None or g is None:
        return
    gf = compose_nat(g, f)
    assert nat_trans_equal(compose_nat(identity_nat(H), gf), gf)
    assert nat_trans_equal(compose_nat(gf, identity_nat(F)), gf)


def test_nat_trans_naturality_is_checked():
    F = presheaf_from_tables(C_SIERP, {"S": ["a", "b"], "S1": ["c", "d"], "e": ["z"]},
                             {"i_S1_S": {"a": "c", "b": "d"}, "i_e_S1": {"c": "z", "d": "z"}})
    comps = {"S": {"a": "a", "b": "a"}, "S1": {"c": "d", "d": "d"}, "e": {"z": "z"}}
    with pytest.raises(NotNatural):
        NatTrans(F, F, comps)


def test_presheaf_functoriality_is_checked():
    vals = {"S": ["a"], "S1": ["c"], "e": ["z", "w"]}
    restr = {"i_S1_S": {"a": "c"}, "i_e_S1": {"c": "z"}, "i_e_S": {"a": "w"}}
    with pytest.raises(NotAFunctor):
        Presheaf(C_SIERP, vals, {**restr, "id_S": {"a": "a"}, "id_S1": {"c": "c"}, "id_e": {"z": "z", "w": "w"}})


def test_from_tables_fills_composites():
    F = presheaf_from_tables(C_SIERP, {"S": ["a"], "S1": ["c"], "e": ["z"]}, {"i_S1_S": {"a": "c"}, "i_e_S1": {"c": "z"}})
    assert F.restrict("i_e_S", "a") == "z"


# -- sieves -----------------------------------------------------------------


def test_sieve_pullbacks():
    R = sieve_generated_by(C_INT, ["i_X_XY"])
    assert pullback_sieve(C_INT, "id_XY", R) == R
    assert pullback_sieve(C_INT, "i_X_XY", R) == maximal_sieve(C_INT, "X")
    assert pullback_sieve(C_INT, "i_XY_L", maximal_sieve(C_INT, "L")) == maximal_sieve(C_INT, "XY")
    with pytest.raises(AnchorMismatch):
        pullback_sieve(C_INT, "i_X_XY", maximal_sieve(C_INT, "L"))


def test_generated_sieves():
    assert sieve_generated_by(C_INT, ["id_L"]) == maximal_sieve(C_INT, "L")
    assert sieve_generated_by(C_INT, [], "L") == empty_sieve(C_INT, "L")
    R = sieve_generated_by(C_INT, ["i_X_XY", "i_Y_XY"])
    assert R.arrows == frozenset(C_INT.arrows_into("XY")) - {"id_XY"}
    assert sieve_generators(C_INT, R) == ["i_X_XY", "i_Y_XY"]
    with pytest.raises(MixedTargets):
        sieve_generated_by(C_INT, ["i_X_XY", "i_X_L"])


def test_all_sieves_are_sieves():
    for U in C_INT.objects:
        sv = all_sieves(C_INT, U)
        assert sv[0] == empty_sieve(C_INT, U) and sv[-1] == maximal_sieve(C_INT, U)
        for R in sv:
            check_sieve(C_INT, R)
            assert subpresheaf_to_sieve(sieve_to_subpresheaf(C_INT, R)) == R
    # sieves on L are the down-sets of the four opens below it, plus the maximal one
    assert len(all_sieves(C_INT, "L")) == 7


def test_matching_families_of_representable():
    hL = yoneda(C_INT, "L")
    R = sieve_generated_by(C_INT, ["i_X_L", "i_Y_L"])
    fams = list(matching_families(hL, R))
    assert len(fams) == 1


# -- limits and colimits ----------------------------------------------------


def test_empty_limit_and_colimit():
    assert set(coproduct_presheaf([], C_INT).apex.sizes().values()) == {0}
    assert terminal_presheaf(C_INT).sizes() == {U: 1 for U in C_INT.objects}
    assert initial_presheaf(C_INT).sizes() == {U: 0 for U in C_INT.objects}


def test_product_of_points_is_empty_representable():
    cone = product_presheaf(yoneda(C_INT, "X"), yoneda(C_INT, "Y"))
    assert find_isomorphism(cone.apex, yoneda(C_INT, "e")) is not None


def test_fibre_product_over_L():
    cone = fibre_product_presheaf(yoneda_morphism(C_INT, "i_X_L"), yoneda_morphism(C_INT, "i_Y_L"))
    assert find_isomorphism(cone.apex, yoneda(C_INT, "e")) is not None


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_product_sizes_are_pointwise(seed):
    rng = random.Random(seed)
    F, G = random_presheaf(C_INT, rng, 3), random_presheaf(C_INT, rng, 3)
    P = product_presheaf(F, G).apex
    assert all(len(P.values[U]) == len(F.values[U]) * len(G.values[U]) for U in C_INT.objects)
    S = coproduct_presheaf([F, G]).apex
    assert all(len(S.values[U]) == len(F.values[U]) + len(G.values[U]) for U in C_INT.objects)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_equalizer_and_coequalizer(seed):
    rng = random.Random(seed)
    F, G = random_presheaf(C_SIERP, rng, 3), random_presheaf(C_SIERP, rng, 3)
    maps = list(iter_nat_trans(F, G))
    if len(maps) < 2:
        return
    f, g = maps[0], maps[-1]
    E = equalizer_presheaf(f, g)
    for U in C_SIERP.objects:
        assert E.subsets[U] == {s for s in F.values[U] if f(U, s) == g(U, s)}
    Q, q = coequalizer_presheaf(f, g)
    assert nat_trans_equal(compose_nat(q, f), compose_nat(q, g))
    # q is pointwise surjective
    assert all(set(q.components[U].values()) == set(Q.values[U]) for U in C_SIERP.objects)


def test_subpresheaf_validation_and_images():
    hL = yoneda(C_INT, "L")
    with pytest.raises(NotAFunctor):
        Subpresheaf(hL, {"X": {"i_X_L"}})
    S = generated_subpresheaf(hL, {"X": ["i_X_L"]})
    assert S.subsets["e"] == {"i_e_L"} and S.subsets["L"] == frozenset()
    assert pointwise_image(yoneda_morphism(C_INT, "i_X_L")) == S
    assert presheaves_equal(S.as_presheaf(), S.as_presheaf())
