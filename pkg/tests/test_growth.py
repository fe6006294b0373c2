import math

import pytest

from utils.errors import ValidationError, WordError
from utils.growth import (
    GrowthCurve,
    GrowthSample,
    bruteforce_table,
    certificate_curve,
    cover_transfer_check,
    cover_transfer_experiment,
    divisibility_bruteforce,
    divisibility_in_kernel,
    divisibility_upper_cyclic,
    example_6_2_row,
    example_6_2_table,
    growth_curve,
    in_kernel,
    kernel_rewrite,
    racg_cyclic_length,
    svarc_milnor_probe,
)
from utils.tubes import BoundInputs, index_bound
from utils.word_parser import parse_free_word


@pytest.mark.parametrize("text, expected", [
    ("a", 2),
    ("a^2", 3),
    ("a^6", 4),
    ("abAB", 3),
    ("b", 2),
])
def test_small_divisibility_values(text, expected):
    assert divisibility_bruteforce(parse_free_word(text), generators=2) == expected


@pytest.mark.parametrize("n", range(1, 13))
def test_powers_match_the_cyclic_bound(n):
    word = (1,) * n
    assert divisibility_upper_cyclic(word) == divisibility_bruteforce(word)


def test_cyclic_bound_needs_a_power():
    with pytest.raises(WordError):
        divisibility_upper_cyclic(parse_free_word("ab"))
    assert divisibility_upper_cyclic(parse_free_word("A^12")) == 5


def test_divisibility_is_conjugation_invariant():
    assert divisibility_bruteforce(parse_free_word("bab^-1")) == divisibility_bruteforce((1,))
    assert divisibility_bruteforce(parse_free_word("baaB"), 2) == divisibility_bruteforce((1, 1), 2)


def test_divisibility_rejects_bad_words():
    with pytest.raises(WordError):
        divisibility_bruteforce(())
    with pytest.raises(WordError):
        divisibility_bruteforce((1, -1, 2))
    with pytest.raises(WordError):
        divisibility_bruteforce((3,), generators=2)
    with pytest.raises(ValidationError):
        divisibility_bruteforce((1,), max_index=9)


def test_search_limit_returns_none():
    # a^6 survives in every quotient on at most 3 points
    assert divisibility_bruteforce((1,) * 6, max_index=3) is None


def test_growth_sample_validation():
    with pytest.raises(ValidationError):
        GrowthSample("a", 1, 1, D_value=1)
    with pytest.raises(ValidationError):
        GrowthSample("a", 1, 2, D_value=2)
    with pytest.raises(ValidationError):
        GrowthSample("a", 1, 1, D_value=2, source="guess")
    assert GrowthSample("a", 1, 1, D_value=1, outside=True).D_value == 1
    row = GrowthSample("a^3", 3, 3, D_value=12, exact=False, source="certificate").as_row(3)
    assert row["D_or_bound"] == "<=12"
    assert GrowthSample("a^9", 9, 9).as_row(9)["D_or_bound"] == "not-found"


def test_growth_curve_of_one_sample():
    curve = growth_curve([GrowthSample("aba", 3, 3, D_value=2)])
    assert curve.points == ((3, 2),)
    extended = growth_curve([GrowthSample("aba", 3, 3, D_value=2)], n_max=5)
    assert extended.as_dict() == {3: 2, 4: 2, 5: 2}
    assert extended.value_at(1) is None


def test_growth_curve_is_a_running_maximum():
    samples = [
        GrowthSample("a", 1, 1, D_value=2),
        GrowthSample("a^2", 2, 2, D_value=3),
        GrowthSample("ab", 2, 2, D_value=2),
        GrowthSample("a^6", 6, 6, D_value=4),
    ]
    assert growth_curve(samples).as_dict() == {1: 2, 2: 3, 3: 3, 4: 3, 5: 3, 6: 4}


def test_growth_curve_bounds_need_the_flag():
    bound = GrowthSample("1 3", 2, 2, geodesic_length=2.1, D_value=10, exact=False, source="certificate")
    with pytest.raises(ValidationError):
        growth_curve([bound])
    curve = growth_curve([bound], norm="geodesic", allow_bounds=True)
    assert curve.upper_bound
    assert curve.points == ((3, 10),)
    assert curve.rows()[0]["kind"] == "upper_bound"


def test_growth_curve_must_be_nondecreasing():
    with pytest.raises(ValidationError):
        GrowthCurve(points=((1, 3), (2, 2)))


def test_kernel_rewrite():
    assert in_kernel(parse_free_word("aa"))
    assert not in_kernel(parse_free_word("ab"))
    assert kernel_rewrite(parse_free_word("b")) == (1,)
    assert kernel_rewrite(parse_free_word("abA")) == (2,)
    assert kernel_rewrite(parse_free_word("a^2")) == (3,)
    assert kernel_rewrite(parse_free_word("A^2")) == (-3,)
    with pytest.raises(ValidationError):
        kernel_rewrite(parse_free_word("a"))


def test_divisibility_in_kernel():
    assert divisibility_in_kernel((1,)) == 1
    assert divisibility_in_kernel((2,)) == 2
    # a^2 is the basis element z of the kernel
    assert divisibility_in_kernel((1, 1)) == 2


def test_cover_transfer_check():
    upper = GrowthCurve(points=((1, 2), (2, 3)))
    lower = GrowthCurve(points=((1, 1), (2, 2)))
    report = cover_transfer_check(2, upper, lower)
    assert report["holds"]
    assert report["min_margin"] == 0
    assert report["message"] == "inequality holds at all n"
    assert cover_transfer_check(1, upper, lower)["holds"] is False
    with pytest.raises(ValidationError):
        cover_transfer_check(0, upper, lower)


def test_identity_cover_holds_with_degree_one():
    samples = bruteforce_table(3)
    curve = growth_curve(samples)
    report = cover_transfer_check(1, curve, curve)
    assert report["holds"]
    assert report["min_margin"] == 0


def test_cover_transfer_experiment():
    report = cover_transfer_experiment(max_len=4, max_index=6)
    assert report["holds"]
    assert report["words"] == 4 + 12 + 36 + 108
    assert [r["n"] for r in report["rows"]] == [1, 2, 3, 4]


@pytest.mark.slow
def test_cover_transfer_experiment_acceptance_size():
    assert cover_transfer_experiment(max_len=6)["holds"]


def test_bruteforce_table():
    table = bruteforce_table(2)
    rows = {s.word: s.as_row(s.word_length)["D_or_bound"] for s in table}
    assert rows["a"] == "2"
    assert rows["a^2"] == "3"
    assert all(s.source == "bruteforce" and s.exact for s in table)


def test_trace_sequence():
    rows = example_6_2_table(20)
    assert [r["trace"] for r in rows] == [2 + 4 * n for n in range(1, 21)]
    assert rows[0]["geodesic_length"] == pytest.approx(2 * math.acosh(3.0))
    assert rows[0]["word_length"] == 2
    for r in rows:
        assert abs(r["geodesic_length"] - 2 * math.log(r["n"])) < 4
    with pytest.raises(ValidationError):
        example_6_2_table(0)


def test_ratio_tends_to_two():
    row = example_6_2_row(10 ** 13)
    assert row["trace"] == 2 + 4 * 10 ** 13
    assert abs(row["ratio"] - 2.0) < 0.1


def test_orbit_comparison(pentagon):
    for seed in (1, 2):
        report = svarc_milnor_probe(pentagon, 100, 8, seed)
        assert report["ok"]
        assert report["translation_violations"] == []
        assert report["a"] <= report["max_generator_displacement"] + 1e-9
        assert report["n_words"] == 100
    assert svarc_milnor_probe(pentagon, 20, 6, 3) == svarc_milnor_probe(pentagon, 20, 6, 3)


def test_orbit_comparison_with_long_words(pentagon):
    # long random words include conjugates of reflections, which are skipped
    report = svarc_milnor_probe(pentagon, 200, 12, 7)
    assert report["n_words"] == 200
    assert report["translation_violations"] == []


def test_racg_cyclic_length(pentagon):
    adj = pentagon.adjacency
    assert racg_cyclic_length((3, 0, 2, 3), adj) == 2
    assert racg_cyclic_length((0, 2), adj) == 2
    assert racg_cyclic_length((0, 0), adj) == 0


def test_certificate_curve(pentagon):
    samples = certificate_curve(pentagon, (0, 2), 3)
    assert [s.word_length for s in samples] == [2, 4, 6]
    for s in samples:
        assert not s.exact and s.source == "certificate"
        bound = index_bound(BoundInputs(2, pentagon.d_P, pentagon.volume_lower, s.geodesic_length))
        assert s.D_value <= math.ceil(bound)
    curve = growth_curve(samples, norm="geodesic", allow_bounds=True)
    assert curve.upper_bound
