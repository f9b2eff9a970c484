from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _util import INT, PT_CATEGORY, PT_COV, SIERP, site_of, stalk_sheafification_sizes
from geoctx.category import validate_category
from geoctx.errors import NotATopology
from geoctx.presheaf import (
    Presheaf,
    Sieve,
    all_sieves,
    find_isomorphism,
    generated_subpresheaf,
    is_isomorphism,
    maximal_sieve,
    presheaf_from_tables,
    sieve_generated_by,
    yoneda,
)
from geoctx.sampling import random_presheaf
from geoctx.topology import (
    Site,
    closure,
    is_closed,
    is_covering_family,
    is_separated,
    is_sheaf,
    is_subcanonical,
    plus_construction,
    sheafify,
    topology_from_pretopology,
    validate_pretopology,
    validate_topology,
)

S_INT, S_SIERP = site_of(INT), site_of(SIERP)
C_INT, COV_INT = S_INT.category, S_INT.cov
C_SIERP, COV_SIERP = S_SIERP.category, S_SIERP.cov
seeds = st.integers(0, 10_000)


@pytest.fixture(scope="module")
def s_int():
    return S_INT


@pytest.fixture(scope="module")
def s_sierp():
    return S_SIERP


def constant(C, tokens):
    return Presheaf(C, {U: tokens for U in C.objects}, {f: {t: t for t in tokens} for f in C.arrows})


# -- pretopologies and topologies -------------------------------------------


def test_pretopologies_pass():
    assert validate_pretopology(PT_CATEGORY, PT_COV)
    assert validate_pretopology(C_INT, COV_INT)
    assert validate_pretopology(C_SIERP, COV_SIERP)


def test_single_point_cover_of_XY_fails():
    cov = {**COV_INT, "XY": [["i_X_XY"]]}
    v = validate_pretopology(C_INT, cov)
    assert v.status == "fail"
    assert v.witness["axiom"] in (2, 4)


def test_generated_topologies():
    J = topology_from_pretopology(PT_CATEGORY, PT_COV)
    assert J["pt"] == {maximal_sieve(PT_CATEGORY, "pt")}
    J = topology_from_pretopology(C_INT, COV_INT)
    assert sieve_generated_by(C_INT, ["i_X_XY", "i_Y_XY"]) in J["XY"]
    assert maximal_sieve(C_INT, "XY") in J["XY"]
    # the empty sieve covers exactly the empty open
    assert [U for U in C_INT.objects if Sieve(U, frozenset()) in J[U]] == ["e"]
    assert validate_topology(C_INT, J)


def test_chaotic_pretopology_gives_iso_sieves():
    cov = {U: [[a] for a in C_INT.arrows_into(U) if C_INT.is_iso(a)] for U in C_INT.objects}
    assert validate_pretopology(C_INT, cov)
    J = topology_from_pretopology(C_INT, cov)
    for U in C_INT.objects:
        assert J[U] == {R for R in all_sieves(C_INT, U) if any(C_INT.is_iso(a) for a in R.arrows)}


def test_minimal_topology_and_axiom_3():
    site = Site.minimal(C_INT)
    assert validate_topology(C_INT, site.J)
    J = dict(site.J)
    J["XY"] = frozenset()
    v = validate_topology(C_INT, J)
    assert v.witness == {"axiom": 3, "object": "XY"}


def test_stability_failure_witness():
    J = dict(Site.minimal(C_INT).J)
    J["XY"] = J["XY"] | {sieve_generated_by(C_INT, ["i_X_XY"])}
    v = validate_topology(C_INT, J)
    # pulling back along Y -> XY leaves only the empty open, which does not cover Y
    assert v.status == "fail"
    assert v.witness == {"axiom": 1, "object": "XY", "arrow": "i_Y_XY", "sieve": ["i_X_XY"]}


def test_least_covering_sieve(s_int):
    assert s_int.least_covering_sieve("XY") == sieve_generated_by(C_INT, ["i_X_XY", "i_Y_XY"])
    assert s_int.least_covering_sieve("e") == Sieve("e", frozenset())
    with pytest.raises(NotATopology):
        Site(C_INT, {U: frozenset() for U in C_INT.objects}).least_covering_sieve("L")


# -- sheaves ----------------------------------------------------------------


def test_minimal_topology_everything_is_a_sheaf():
    site = Site.minimal(C_INT)
    rng = random.Random(0)
    for _ in range(10):
        assert is_sheaf(site, random_presheaf(C_INT, rng, 3))


def test_representables_are_sheaves(s_int, s_sierp):
    for s in (s_int, s_sierp):
        for U in s.category.objects:
            assert is_sheaf(s, yoneda(s.category, U))
    assert is_subcanonical(s_int) and is_subcanonical(Site.minimal(C_INT))


def test_two_sections_over_empty_open(s_int):
    F = presheaf_from_tables(C_INT, {U: ["a", "b"] for U in C_INT.objects},
                             {f: {"a": "a", "b": "b"} for f in C_INT.arrows})
    v = is_sheaf(s_int, F)
    assert v.status == "fail"
    assert v.witness["object"] == "e"
    assert v.witness["sieve"] == []
    assert v.witness["kind"] == "not separated"
    assert not is_separated(s_int, F)


def test_empty_sieve_covering_on_discrete_pair():
    C = validate_category(["a", "b"], [("id_a", "a", "a"), ("id_b", "b", "b")])
    J = {U: frozenset({Sieve(U, frozenset()), maximal_sieve(C, U)}) for U in C.objects}
    assert validate_topology(C, J)
    site = Site.from_topology(C, J)
    v = is_subcanonical(site)
    assert v.status == "fail"
    assert v.witness["representable"] in ("a", "b")


def test_covering_families(s_int):
    assert is_covering_family(s_int, ["id_L"])
    assert is_covering_family(s_int, ["i_X_XY", "i_Y_XY"])
    assert not is_covering_family(s_int, ["i_X_L", "i_Y_L"])
    assert is_covering_family(s_int, [], "e")
    assert not is_covering_family(s_int, [], "X")


# -- sheafification ---------------------------------------------------------


def test_sheafify_constant_two(s_int):
    aP, eta = sheafify(s_int, constant(C_INT, ("0", "1")))
    assert aP.sizes() == {"e": 1, "X": 2, "Y": 2, "XY": 4, "L": 2}
    assert is_sheaf(s_int, aP)


def test_sheafify_a_sheaf_is_iso(s_int):
    hL = yoneda(C_INT, "L")
    aF, eta = sheafify(s_int, hL)
    assert is_isomorphism(eta)


def test_one_plus_step_separates(s_int):
    rng = random.Random(11)
    for _ in range(10):
        Fp, _ = plus_construction(s_int, random_presheaf(C_INT, rng, 3))
        assert is_separated(s_int, Fp)


@settings(max_examples=40, deadline=None)
@given(seeds, st.sampled_from(["int", "sierp"]))
def test_sheafification_matches_stalk_oracle(seed, which):
    sp, site = (INT, S_INT) if which == "int" else (SIERP, S_SIERP)
    C = site.category
    F = random_presheaf(C, random.Random(seed), 4)
    aF, eta = sheafify(site, F)
    assert aF.sizes() == stalk_sheafification_sizes(sp, C, F)
    assert is_sheaf(site, aF)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_sheafification_idempotent_on_sierpinski(seed):
    site = S_SIERP
    aF, _ = sheafify(site, random_presheaf(C_SIERP, random.Random(seed), 4))
    aaF, eta = sheafify(site, aF)
    assert is_isomorphism(eta)
    assert find_isomorphism(aaF, aF) is not None


# -- closure ----------------------------------------------------------------


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_closure_is_a_closure_operator(seed):
    site = S_INT
    rng = random.Random(seed)
    F, _ = sheafify(site, random_presheaf(C_INT, rng, 3))
    gens = {U: [s for s in F.values[U] if rng.random() < 0.3] for U in C_INT.objects}
    S = generated_subpresheaf(F, gens)
    cl = closure(site, S)
    assert S <= cl
    assert is_closed(site, cl)
    assert is_sheaf(site, cl.as_presheaf())


def test_points_of_L_do_not_cover_L(s_int):
    hL = yoneda(C_INT, "L")
    S = generated_subpresheaf(hL, {"X": ["i_X_L"], "Y": ["i_Y_L"]})
    cl = closure(s_int, S)
    assert cl.subsets["XY"] == {"i_XY_L"}
    assert cl.subsets["L"] == frozenset()
