import itertools
from fractions import Fraction

import pytest
from hypothesis import given

from helpers import bernoulli_pair, chain_joint, small_distributions
from swigcheck.dist import (
    FiniteDistribution,
    depends_only_on,
    parse_prob,
)
from swigcheck.errors import (
    CellBudgetExceeded,
    InvalidDocument,
    InvalidQuery,
    UnknownVariable,
)

HALF = Fraction(1, 2)


def uniform_two_binary():
    return FiniteDistribution(
        [("A", 2), ("B", 2)], {c: Fraction(1, 4) for c in itertools.product((0, 1), repeat=2)}
    )


def test_marginal_of_uniform_is_uniform():
    d = uniform_two_binary().marginal({"A"})
    assert d.p((0,)) == d.p((1,)) == HALF


def test_marginal_keeping_everything_is_identity():
    d = chain_joint()
    assert d.marginal(d.names) == d


def test_chain_c_marginal_matches_brute_force():
    d = chain_joint()
    # independent oracle: direct sum over the eight stored cells
    brute = sum((p for cell, p in d.support() if cell[2] == 1), Fraction(0))
    assert brute == HALF
    assert d.marginal({"C"}).p((1,)) == HALF


def test_marginal_unknown_variable():
    with pytest.raises(UnknownVariable):
        chain_joint().marginal({"Q"})


def test_conditional_marks_zero_rows_undefined():
    point = FiniteDistribution([("A", 2), ("B", 2)], {(0, 0): Fraction(1)})
    table = point.conditional(("B",), ("A",))
    assert table.row((0,)) == {(0,): Fraction(1)}
    assert table.row((1,)) is None


def test_conditional_of_product_is_constant_in_the_given():
    d = bernoulli_pair(Fraction(1, 3), Fraction(2, 7))
    table = d.conditional(("Y",), ("X",))
    assert table.row((0,)) == table.row((1,)) == {(0,): Fraction(5, 7), (1,): Fraction(2, 7)}


def test_sign_locked_member_conditional_rows():
    # the negative-side law of the two-indicator construction
    p_minus = bernoulli_pair(HALF, Fraction(3, 10))
    table = p_minus.conditional(("Y",), ("X",))
    for x in (0, 1):
        assert table.row((x,)) == {(0,): Fraction(7, 10), (1,): Fraction(3, 10)}


def test_conditional_rejects_overlap_and_empty_target():
    d = uniform_two_binary()
    with pytest.raises(InvalidQuery):
        d.conditional(("A",), ("A",))
    with pytest.raises(InvalidQuery):
        d.conditional((), ("A",))


def test_conditional_given_order_follows_the_request():
    d = chain_joint()
    table = d.conditional(("C",), ("B", "A"))
    assert table.given_names == ("B", "A")
    swapped = d.conditional(("C",), ("A", "B"))
    assert table.row((1, 0)) == swapped.row((0, 1))


def test_depends_only_on_constant_family():
    rows = {(0,): {"r": 1}, (1,): {"r": 1}}
    rep = depends_only_on(rows, ("a",), set())
    assert rep.holds and rep.witness is None


def test_depends_only_on_two_row_family():
    rows = {(0,): {(1,): Fraction(1, 4)}, (1,): {(1,): Fraction(3, 4)}}
    assert depends_only_on(rows, ("a",), {"a"}).holds
    rep = depends_only_on(rows, ("a",), set())
    assert not rep.holds
    first, second = rep.witness
    assert dict(first) == {"a": 0} and dict(second) == {"a": 1}


def test_depends_only_on_skips_undefined_rows():
    rows = {(0, 0): {"r": 1}, (0, 1): None, (1, 0): {"r": 2}, (1, 1): {"r": 2}}
    rep = depends_only_on(rows, ("a", "b"), {"a"})
    assert rep.holds and rep.skipped == 1


def test_parse_prob_accepts_fractions_decimals_and_rejects_negatives():
    assert parse_prob("1/4") == Fraction(1, 4)
    assert parse_prob("0.25") == Fraction(1, 4)
    assert parse_prob(1) == Fraction(1)
    with pytest.raises(InvalidDocument):
        parse_prob("-1/4")
    with pytest.raises(InvalidDocument):
        parse_prob("x")


def test_total_mass_must_be_one():
    with pytest.raises(InvalidDocument):
        FiniteDistribution([("A", 2)], {(0,): Fraction(1, 3)})


def test_cell_budget(monkeypatch):
    monkeypatch.setenv("SWIGCHECK_MAX_CELLS", "4")
    with pytest.raises(CellBudgetExceeded):
        FiniteDistribution([("A", 2), ("B", 2), ("C", 2)], {(0, 0, 0): Fraction(1)})
    monkeypatch.setenv("SWIGCHECK_MAX_CELLS", "8")
    FiniteDistribution([("A", 2), ("B", 2), ("C", 2)], {(0, 0, 0): Fraction(1)})


def test_json_roundtrip_canonicalizes():
    d = chain_joint()
    doc = d.to_json()
    assert doc["variables"] == {"A": 2, "B": 2, "C": 2}
    cells = [tuple(e["cell"]) for e in doc["entries"]]
    assert cells == sorted(cells)
    assert FiniteDistribution.from_json(doc) == d


def test_json_rejects_duplicates_and_negative_mass():
    with pytest.raises(InvalidDocument):
        FiniteDistribution.from_json(
            {"variables": {"A": 2}, "entries": [{"cell": [0], "p": "1/2"}, {"cell": [0], "p": "1/2"}]}
        )
    with pytest.raises(InvalidDocument):
        FiniteDistribution.from_json(
            {"variables": {"A": 2}, "entries": [{"cell": [0], "p": "-1"}, {"cell": [1], "p": "2"}]}
        )


@given(small_distributions())
def test_marginal_composition(d):
    names = list(d.names)
    s = names[: max(1, len(names) - 1)]
    t = s[: max(1, len(s) - 1)]
    assert d.marginal(s).marginal(t) == d.marginal(t)


@given(small_distributions())
def test_chain_rule_exactness(d):
    names = list(d.names)
    for cell, p in d.support():
        acc = Fraction(1)
        for i, v in enumerate(names):
            table = d.conditional((v,), names[:i])
            row = table.row(cell[:i])
            assert row is not None
            acc *= row.get((cell[i],), Fraction(0))
        assert acc == p


@given(small_distributions())
def test_serialization_roundtrip_random(d):
    assert FiniteDistribution.from_json(d.to_json()) == d


def test_reorder_permutes_cells():
    d = chain_joint()
    r = d.reorder(("C", "A", "B"))
    assert r.names == ("C", "A", "B")
    for cell, p in d.support():
        assert r.p((cell[2], cell[0], cell[1])) == p
