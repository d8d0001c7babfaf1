import random

import pytest
from hypothesis import given, settings, strategies as st

from mvbasis.model import (SignatureMismatch, bck_reduct, load_model, lukasiewicz_chain,
                           satisfies, models_theory)
from mvbasis.proof import ProofLibrary, bundled_scripts, check_corpus, parse_proofs
from mvbasis.search import (
    CONSTANT_EXPANSION, EQUAL, INDEPENDENCE_CASES, LEFT_NOT_RIGHT, RIGHT_NOT_LEFT, SAME_SIGNATURE,
    BudgetExceeded, PartialAlgebra, SearchConfig, SearchError, SearchStats, canonical_key,
    clear_cache, compare_same_signature, compare_with_constant_expansion, enumerate_models,
    is_canonical, key_to_algebra, model_keys, smallest_separating_size, soundness_check,
    verify_independence,
)
from mvbasis.term import parse_term
from mvbasis.theory import Theory, builtin_signatures, builtin_theories, get_theory

import oracles

THEORIES = sorted(builtin_theories())

# (labelled, up to isomorphism) model counts at size 3, computed by this package and
# cross-checked against the naive filter below
COUNTS_3 = {
    "MV_A": (6, 1), "MV_M": (6, 1), "MV_3base": (6, 1), "DERIVED_MV": (6, 1),
    "CBCK_B": (9, 2), "CBCK_B_elim": (9, 2), "CBCK_C": (9, 2), "PR_2base": (9, 2),
    "LBCK_B": (9, 2), "LBCK_B_elim": (9, 2), "LBCK_L": (9, 2), "DERIVED_BCK": (12, 3),
}


@pytest.mark.parametrize("name", THEORIES)
def test_singleton_is_the_only_model_of_size_one(name):
    ms = list(enumerate_models(get_theory(name), 1))
    assert len(ms) == 1 and all(v == 0 for v in ms[0].key)


@pytest.mark.parametrize("name", THEORIES)
def test_oracle_equivalence_size_two(name):
    t = get_theory(name)
    assert set(model_keys(t, 2)) == oracles.naive_models(t, 2)


def test_cbck_against_all_sixteen_tables():
    t = get_theory("CBCK_C")
    tables = list(oracles.all_tables(t.signature, 2))
    assert len(tables) == 16
    want = sorted(k for k, tabs in tables if all(oracles.holds(tabs, 2, i) for i in t.identities))
    assert model_keys(t, 2) == want
    # classical implication, once with 1 as top and once with 0 as top
    assert want == [(0, 1, 0, 0), (1, 1, 0, 1)]


def test_mv_m_against_all_64_pairs():
    t = get_theory("MV_M")
    tables = list(oracles.all_tables(t.signature, 2))
    assert len(tables) == 64
    want = sorted(k for k, tabs in tables if all(oracles.holds(tabs, 2, i) for i in t.identities))
    assert model_keys(t, 2) == want
    assert len(want) == 2


@pytest.mark.parametrize("name", ["CBCK_C", "LBCK_L", "PR_2base", "MV_M"])
def test_oracle_equivalence_size_three(name):
    t = get_theory(name)
    assert set(model_keys(t, 3)) == oracles.naive_models(t, 3)


@pytest.mark.parametrize("name", THEORIES)
def test_counts_and_iso_counts(name):
    t = get_theory(name)
    assert len(model_keys(t, 2)) == 2
    assert len(model_keys(t, 2, SearchConfig(up_to_iso=True))) == 1
    assert (len(model_keys(t, 3)), len(model_keys(t, 3, SearchConfig(up_to_iso=True)))) == COUNTS_3[name]


def test_output_sorted_unique_and_lazy_stream_agrees():
    t = get_theory("CBCK_C")
    keys = model_keys(t, 3)
    assert keys == sorted(set(keys))
    assert [a.key for a in enumerate_models(t, 3)] == keys
    stats = SearchStats()
    assert [a.key for a in enumerate_models(t, 3, config=SearchConfig(workers=2), stats=stats)] == keys
    assert stats.models == len(keys) and stats.nodes > 0


def test_three_element_chain_found_up_to_iso():
    t = get_theory("MV_A")
    [rep] = model_keys(t, 3, SearchConfig(up_to_iso=True))
    assert key_to_algebra(t.signature, 3, rep) == lukasiewicz_chain(3) or \
        canonical_key(t.signature, 3, lukasiewicz_chain(3).key) == rep


def test_prune_witnesses_recheck():
    for name in THEORIES:
        t = get_theory(name)
        sizes = (2,) if len(t.signature.ops) > 1 else (2, 3)
        for n in sizes:
            seen = []
            model_keys(t, n, on_prune=seen.append)
            assert seen, name
            bad = [w for w in seen if not w.recheck()]
            assert not bad, (name, n, bad[:1])


def test_prune_witness_recheck_detects_tampering():
    t = get_theory("CBCK_C")
    seen = []
    model_keys(t, 3, on_prune=seen.append)
    w = next(x for x in seen if x.forcing is None)
    import dataclasses
    blank = dataclasses.replace(w, cells=tuple(-1 for _ in w.cells))
    assert not blank.recheck()


@settings(max_examples=30)
@given(seed=st.integers(0, 10**6), name=st.sampled_from(THEORIES), n=st.integers(2, 3))
def test_closure_under_relabeling(seed, name, n):
    t = get_theory(name)
    keys = model_keys(t, n)
    found = set(keys)
    rng = random.Random(seed)
    key = rng.choice(keys)
    perm = list(range(n))
    rng.shuffle(perm)
    b = key_to_algebra(t.signature, n, key).relabel(perm)
    assert b.key in found
    assert models_theory(b, t)


def test_monotonicity():
    sig = get_theory("CBCK_C")
    b5 = get_theory("LBCK_B")["B5"]
    bigger = sig.plus(b5, name="CBCK_C+B5")
    for n in (2, 3, 4):
        small = set(model_keys(sig, n))
        assert set(model_keys(bigger, n)) <= small
    mv = get_theory("MV_M")
    assert set(model_keys(mv, 2)) <= set(model_keys(mv.select(["M1"], name="M1only"), 2))


def test_canonical_helpers():
    t = get_theory("CBCK_C")
    for k in model_keys(t, 3):
        c = canonical_key(t.signature, 3, k)
        assert is_canonical(t.signature, 3, c)
        assert c <= k
    with pytest.raises(SearchError):
        canonical_key(t.signature, 7, (0,) * 49)
    with pytest.raises(SearchError):
        model_keys(t, 7, SearchConfig(up_to_iso=True))


def test_partial_algebra():
    sig = builtin_signatures()["BCK2"]
    pa = PartialAlgebra.empty(sig, 2)
    assert not pa.complete
    with pytest.raises(SearchError):
        pa.to_algebra()
    c1 = get_theory("CBCK_C")["C1"]
    assert pa.evaluate(c1.lhs, {"x": 0, "y": 1}) is None
    pa = PartialAlgebra.from_cells(sig, 2, (0, 1, 0, -1))
    assert pa.evaluate(c1.lhs, {"x": 0, "y": 1}) == 1
    assert pa.evaluate(c1.lhs, {"x": 1, "y": 1}) is None
    with pytest.raises(SearchError):
        PartialAlgebra(sig, 2, [[0, 5, 0, 0]])
    full = PartialAlgebra.from_cells(sig, 2, (0, 1, 0, 1))
    assert full.complete and full.to_algebra() == load_model("bck_indep_proj")


# comparisons

@pytest.mark.parametrize("n", [1, 2, 3])
def test_theorem_comparisons_small(n):
    th = builtin_theories()
    r = compare_with_constant_expansion(th["MV_A"], th["MV_M"], n)
    assert r.equal and r.mode == CONSTANT_EXPANSION and r.constant == "zero"
    for left, right in (("CBCK_C", "CBCK_B_elim"), ("LBCK_L", "LBCK_B_elim"),
                        ("CBCK_C", "PR_2base")):
        r = compare_same_signature(th[left], th[right], n)
        assert r.equal and r.mode == SAME_SIGNATURE and r.witness is None
        assert r.left_count == r.right_count


def test_mv_a_against_m1_alone_differs():
    th = builtin_theories()
    m1 = th["MV_M"].select(["M1"], name="M1only")
    r = compare_with_constant_expansion(th["MV_A"], m1, 2)
    assert r.verdict == RIGHT_NOT_LEFT
    w = r.witness
    assert satisfies(w, m1["M1"]).holds
    assert not models_theory(w, th["MV_M"])
    assert r.to_dict()["witness"]["signature"] == "MV21"


def test_constant_expansion_requires_one_extra_constant():
    th = builtin_theories()
    with pytest.raises(SignatureMismatch):
        compare_with_constant_expansion(th["MV_A"], th["CBCK_C"], 2)
    with pytest.raises(SignatureMismatch):
        compare_same_signature(th["MV_A"], th["MV_M"], 2)


def test_cbck_and_lbck_first_differ_at_four():
    th = builtin_theories()
    rep = smallest_separating_size(th["CBCK_C"], th["LBCK_L"], range(1, 5))
    assert rep is not None and rep.size == 4
    assert (rep.left_count, rep.right_count) == (76, 64)
    assert rep.verdict == LEFT_NOT_RIGHT
    w = rep.witness
    assert w.table("imp") == (0, 1, 2, 3, 0, 0, 0, 2, 0, 2, 0, 2, 0, 2, 0, 0)
    assert models_theory(w, th["CBCK_C"])
    assert not satisfies(w, th["LBCK_B_elim"]["B5"]).holds
    assert smallest_separating_size(th["CBCK_C"], th["LBCK_L"], range(1, 4)) is None


def test_n4_bck_comparisons_equal():
    th = builtin_theories()
    assert compare_same_signature(th["CBCK_C"], th["CBCK_B_elim"], 4).equal
    assert compare_same_signature(th["LBCK_L"], th["LBCK_B_elim"], 4).equal
    mv4 = model_keys(th["MV_A"], 4)
    assert len(mv4) == 36
    chain = lukasiewicz_chain(4)
    assert chain.key in mv4
    l4 = bck_reduct(chain)
    assert l4.key in set(model_keys(th["LBCK_L"], 4))


# independence

@pytest.mark.parametrize("case", INDEPENDENCE_CASES, ids=lambda c: f"{c[0]}-{c[1]}")
def test_independence_cases(case):
    model, theory, hold, fail = case
    r = verify_independence(get_theory(theory), load_model(model), hold, fail)
    assert r.passed
    d = r.to_dict()
    assert d["passed"] and d["model"] == model
    failing = [x for x in d["results"] if not x["holds"]]
    assert [x["identity"] for x in failing] == list(fail)
    assert all("counterexample" in x for x in failing)


def test_independence_swapped_expectation_fails():
    r = verify_independence(get_theory("MV_M"), load_model("mv_indep_A"), ["M2"], ["M1"])
    assert not r.passed


def test_independence_errors():
    t = get_theory("CBCK_C")
    with pytest.raises(SignatureMismatch):
        verify_independence(t, load_model("mv_indep_A"), ["C1"], ["C2"])
    with pytest.raises(KeyError):
        verify_independence(t, load_model("bck_indep_proj"), ["C1"], ["C9"])
    with pytest.raises(SearchError):
        verify_independence(t, load_model("bck_indep_proj"), ["C1"], [])
    with pytest.raises(SearchError):
        verify_independence(t, load_model("bck_indep_proj"), ["C1", "C2"], ["C2"])


# configuration, workers and budgets

def test_worker_count_does_not_change_output():
    t = get_theory("LBCK_L")
    one = model_keys(t, 3, SearchConfig(workers=1), stats=SearchStats())
    for w, split in ((2, 1), (4, 2), (3, 5)):
        assert model_keys(t, 3, SearchConfig(workers=w, split_cells=split), stats=SearchStats()) == one
    iso = model_keys(t, 3, SearchConfig(up_to_iso=True, workers=2), stats=SearchStats())
    assert iso == model_keys(t, 3, SearchConfig(up_to_iso=True), stats=SearchStats())


def test_budget_exceeded():
    t = get_theory("MV_M")
    with pytest.raises(BudgetExceeded) as ei:
        model_keys(t, 3, SearchConfig(budget_secs=1e-6), stats=SearchStats())
    assert ei.value.nodes > 0
    with pytest.raises(BudgetExceeded):
        model_keys(t, 3, SearchConfig(budget_secs=1e-6, workers=2), stats=SearchStats())
    with pytest.raises(BudgetExceeded):
        list(enumerate_models(t, 3, config=SearchConfig(budget_secs=1e-6)))


def test_cache_is_transparent():
    t = get_theory("CBCK_C")
    a = model_keys(t, 3)
    clear_cache()
    b = model_keys(t, 3)
    a.append(("junk",))
    assert model_keys(t, 3) == b


# soundness of the proof corpus against enumerated models

def test_soundness_of_bundled_corpus(corpus):
    lib, _ = corpus
    s = soundness_check(lib, sizes=(2, 3))
    assert s.ok, [(v.script, v.size) for v in s.violations[:3]]
    assert s.checks > 600
    assert s.models[("MV_M", 3)] == 6 and s.models[("CBCK_C", 3)] == 9


def test_soundness_of_rebased_corpus():
    lib, _ = check_corpus(bundled_scripts(), rebase={"MV_M": "MV_3base"}, skip=["eq9", "eq13"])
    assert soundness_check(lib, sizes=(2,)).ok


def test_soundness_negative_control():
    th = builtin_theories()
    bogus = th["CBCK_C"].plus(
        get_theory("CBCK_B_elim")["B1"].__class__(
            "comm", parse_term("imp(x,y)", th["CBCK_C"].signature),
            parse_term("imp(y,x)", th["CBCK_C"].signature)), name="T")
    th["T"] = bogus
    lib = ProofLibrary(theories=th)
    [s] = parse_proofs("proof p in CBCK_C\n  goal p: imp(x,y) = imp(y,x)\n  chain:\n"
                       "    imp(x,y)\n    = imp(y,x)  by comm\n")
    lib.rebase["CBCK_C"] = "T"
    assert lib.check(s).ok
    lib.rebase.clear()
    summary = soundness_check(lib, sizes=(2,))
    assert not summary.ok
    v = summary.violations[0]
    assert v.script == "p" and v.size == 2 and not v.report.holds
