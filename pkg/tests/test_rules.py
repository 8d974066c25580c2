import json
from fractions import Fraction

import numpy as np
import pytest

from tritype.core import ConfigError, count_vector_index, enumerate_count_vectors
from tritype.rules import (
    linear_rule,
    load_rule,
    perturbed_rps_rule,
    resolve_rule,
    rps_rule,
    tournament_outcome,
    tournament_rule,
    validate_rule,
)


def rotate_census(u):
    # type relabelling rock -> paper -> scissors -> rock
    return (u[2], u[0], u[1])


def rotate_row(p):
    return (p[2], p[0], p[1])


def test_linear_rule_rows_are_u_over_m():
    t2 = linear_rule(2)
    assert tuple(t2.prob((1, 1, 0))) == (0.5, 0.5, 0.0)
    t4 = linear_rule(4)
    assert tuple(t4.prob((4, 0, 0))) == (1.0, 0.0, 0.0)
    assert tuple(t4.prob((2, 1, 1))) == (0.5, 0.25, 0.25)


def test_rps_rule_all_six_entries():
    t = rps_rule()
    expected = {
        (2, 0, 0): (1, 0, 0), (0, 2, 0): (0, 1, 0), (0, 0, 2): (0, 0, 1),
        (1, 1, 0): (0, 1, 0), (1, 0, 1): (1, 0, 0), (0, 1, 1): (0, 0, 1),
    }
    for u, row in expected.items():
        assert tuple(t.prob(u)) == row


def test_perturbed_rule_entries():
    t = perturbed_rps_rule(0.05)
    np.testing.assert_allclose(t.prob((1, 1, 0)), [1 / 60, 58 / 60, 1 / 60], rtol=1e-15)
    np.testing.assert_allclose(t.prob((0, 0, 2)), [1 / 60, 1 / 60, 58 / 60], rtol=1e-15)
    k = Fraction(0.05) / 3  # exact in the binary h actually supplied
    assert t.exact[count_vector_index((1, 0, 1), 2)] == (1 - 2 * k, k, k)


def test_perturbed_rule_at_zero_reduces_to_rps():
    zero = perturbed_rps_rule(0.0)
    plain = rps_rule()
    assert np.array_equal(zero.probs, plain.probs)
    assert zero.exact == plain.exact


@pytest.mark.parametrize("h", [-0.1, 1.0, 1.5])
def test_perturbed_rule_domain(h):
    with pytest.raises(ValueError):
        perturbed_rps_rule(h)


def test_tournament_rule_published_entries():
    t = tournament_rule()
    assert tuple(t.prob((4, 0, 0))) == (1.0, 0.0, 0.0)
    np.testing.assert_allclose(t.prob((2, 1, 1)), [1 / 3, 2 / 3, 0.0], rtol=1e-16)
    np.testing.assert_allclose(t.prob((1, 1, 2)), [2 / 3, 0.0, 1 / 3], rtol=1e-16)


def test_tournament_oracle_examples():
    assert tournament_outcome((2, 1, 1)) == (Fraction(1, 3), Fraction(2, 3), 0)
    assert tournament_outcome((2, 2, 0)) == (0, 1, 0)
    assert tournament_outcome((0, 0, 4)) == (0, 0, 1)


def test_tournament_oracle_matches_table_exactly():
    t = tournament_rule()
    for i, u in enumerate(enumerate_count_vectors(4)):
        assert tournament_outcome(u) == t.exact[i], u


def test_tournament_three_type_case_structure():
    # with all three types present, the duplicated type wins 1/3 of the
    # time (duplicates meet in round one), its predator wins 2/3, and the
    # type the duplicate beats never wins
    for census, dup in (((2, 1, 1), 0), ((1, 2, 1), 1), ((1, 1, 2), 2)):
        p = tournament_outcome(census)
        predator = (dup + 1) % 3
        prey = (dup + 2) % 3
        assert p[dup] == Fraction(1, 3)
        assert p[predator] == Fraction(2, 3)
        assert p[prey] == 0


def test_two_type_censuses_go_to_the_heads_up_winner():
    # paper beats rock, scissors beat paper, rock beats scissors
    winner_of = {(0, 1): 1, (1, 2): 2, (0, 2): 0}
    for (a, b), w in winner_of.items():
        for na in (1, 2, 3):
            u = [0, 0, 0]
            u[a], u[b] = na, 4 - na
            p = tournament_outcome(tuple(u))
            assert p[w] == 1, (u, p)


def test_cyclic_symmetry_of_builtin_tables():
    for table in (rps_rule(), perturbed_rps_rule(0.3), tournament_rule()):
        for u, row in table.entries():
            rotated = table.prob(rotate_census(u))
            assert tuple(rotated) == rotate_row(tuple(row)), (table.name, u)


def test_validate_rule_accepts_builders():
    for table in (linear_rule(1), linear_rule(8), rps_rule(),
                  perturbed_rps_rule(0.9), tournament_rule()):
        assert validate_rule(table) is None


def test_validate_rule_describes_failures():
    t = rps_rule()
    bad_neg = t.probs.copy()
    bad_neg[0] = [1.5, -0.5, 0.0]
    from tritype.core import RuleTable

    assert "negative" in validate_rule(RuleTable(m=2, probs=bad_neg))
    bad_sum = t.probs.copy()
    bad_sum[1] = [0.5, 0.4, 0.0]
    assert "sums to" in validate_rule(RuleTable(m=2, probs=bad_sum))
    assert "rows" in validate_rule(RuleTable(m=2, probs=t.probs[:-1]))
    assert "m must be" in validate_rule(RuleTable(m=17, probs=t.probs))


def _write_rule(tmp_path, doc):
    path = tmp_path / "rule.json"
    path.write_text(json.dumps(doc))
    return str(path)


def _tournament_doc():
    t = tournament_rule()
    return {
        "m": 4,
        "entries": [
            {"u": list(u), "p": [float(v) for v in row]}
            for u, row in t.entries()
        ],
    }


def test_load_rule_round_trips_a_valid_file(tmp_path):
    path = _write_rule(tmp_path, _tournament_doc())
    loaded = load_rule(path)
    assert loaded.m == 4
    assert np.array_equal(loaded.probs, tournament_rule().probs)


@pytest.mark.parametrize("mutate, message", [
    (lambda d: d["entries"].pop(3), "missing censuses"),
    (lambda d: d["entries"][0]["p"].__setitem__(0, -0.5), "negative"),
    (lambda d: d["entries"][0]["p"].__setitem__(0, 0.9), "sums to"),
    (lambda d: d["entries"].append(d["entries"][0]), "duplicate"),
    (lambda d: d["entries"][0]["u"].__setitem__(0, 5), "does not sum"),
    (lambda d: d.update(m=0), "m must be"),
    (lambda d: d.update(m=17), "m must be"),
    (lambda d: d.pop("m"), '"m" and "entries"'),
])
def test_load_rule_rejects_malformed_files(tmp_path, mutate, message):
    doc = _tournament_doc()
    mutate(doc)
    with pytest.raises(ConfigError, match=message):
        load_rule(_write_rule(tmp_path, doc))


def test_load_rule_rejects_non_json(tmp_path):
    path = tmp_path / "rule.json"
    path.write_text("{oops")
    with pytest.raises(ConfigError, match="not valid JSON"):
        load_rule(str(path))
    with pytest.raises(ConfigError, match="cannot read"):
        load_rule(str(tmp_path / "absent.json"))


def test_resolve_rule_dispatch(tmp_path):
    assert resolve_rule("linear", m=5).m == 5
    assert resolve_rule("linear").m == 2
    assert resolve_rule("rps").name == "rps"
    assert resolve_rule("perturbed_rps", h=0.2).params["h"] == 0.2
    assert resolve_rule("tournament4").m == 4
    path = _write_rule(tmp_path, _tournament_doc())
    assert resolve_rule("custom", table_path=path).m == 4
    with pytest.raises(ConfigError):
        resolve_rule("perturbed_rps")
    with pytest.raises(ConfigError):
        resolve_rule("custom")
