import numpy as np
import pytest

from hamforge.circuit import count_resources
from hamforge.errors import UnknownFormula
from hamforge.primitives import (binary_norm_bound, build_binary_norm_prep, build_modular_adder,
                                 build_multicontrol, single_gate_circuit,
                                 solve_binary_norm_angles)
from hamforge.reference import popcount
from hamforge.resources import (CATALOG, audit_spec, check_bounds, evaluate_bound, loglog_slope,
                                toffoli_count)
from hamforge.spec_model import simple_spec


def test_documented_values():
    assert evaluate_bound("banded_sparse_access", n=3, l=2)[0] == 240
    assert evaluate_bound("momentum_oracle", l=1) == (2, 2, 0)
    assert evaluate_bound("coordinate_polynomial_oracle", q=1, n=3)[0] == 17436


def test_banded_access_variants_disagree():
    f = CATALOG["banded_sparse_access"]
    total = f.fn(4, 2)
    parts = f.variants["summed_parts"](4, 2)
    table = f.variants["table_columns"](4, 2)
    assert total[0] == parts[0] and total[1] != parts[1]
    assert table[:2] == total[1::-1]


def test_constant_variants():
    a = evaluate_bound("A_H", n=3, q=1, gamma=0, lmax=1)
    t = CATALOG["A_H"].variants["table_constant_383"](3, 1, 0, 1)
    assert a[1] - t[1] == 2 ** 1
    u = evaluate_bound("U_H", n=3, q=1, gamma=0, lmax=1, l=2)
    assert u[2] == 3 * 3 - 2 - 1


def test_unknown_formula():
    with pytest.raises(UnknownFormula):
        evaluate_bound("quantum_teleporter", n=3)


@pytest.mark.parametrize("name,fixed", [
    ("banded_sparse_access", {"l": 2}), ("amplitude_oracle_x", {}),
    ("coordinate_polynomial_oracle", {"q": 2}), ("one_term_aux", {"q": 1, "l": 1}),
    ("A_H", {"q": 1, "gamma": 1, "lmax": 2}), ("U_H", {"q": 1, "gamma": 1, "lmax": 2, "l": 2}),
    ("evolution", {"q": 1, "gamma": 0, "l": 1, "Omega": 5}), ("coordinate_superposition", {"q": 2}),
])
def test_monotone_in_n(name, fixed):
    vals = [evaluate_bound(name, n=n, **fixed) for n in range(3, 9)]
    for a, b in zip(vals, vals[1:]):
        assert b[0] >= a[0] and b[1] >= a[1]
        assert min(b[:2]) >= 0


def test_binomial_sum_matches_prep_count():
    for n in range(2, 7):
        for chi in (1, 2, 3):
            if chi < n:
                f = evaluate_bound("coordinate_superposition", n=n, q=chi)
                assert f[:2] == binary_norm_bound(n, chi)


@pytest.mark.parametrize("m", [2, 3, 4, 5])
def test_multicontrol_strict_and_toffolis(m):
    c = build_multicontrol("1" * m, single_gate_circuit("x"))
    e = check_bounds(c, "multicontrol", {"m": m})
    assert e.status == "pass"
    assert toffoli_count(c) <= 2 * m - 3


def test_binary_norm_prep_strict(rng):
    n, chi = 4, 2
    beta = np.array([rng.normal() if popcount(i) <= chi else 0.0 for i in range(16)])
    beta /= np.linalg.norm(beta)
    c = build_binary_norm_prep(solve_binary_norm_angles(beta, n, chi, "tree"), n, chi)
    assert check_bounds(c, "coordinate_superposition", {"n": n, "q": chi}).status == "pass"


def test_adder_advisory():
    e = check_bounds(build_modular_adder(5), "banded_sparse_access", {"n": 5, "l": 0})
    assert e.status in ("within", "exceeds")
    assert count_resources(build_modular_adder(5))[1] <= 26 * 5 - 37


def test_audit_report_json():
    rep = audit_spec(simple_spec(2, [(1.0, [0, 0.9], 1)]))
    doc = rep.to_json()
    names = {e["name"] for e in doc["entries"]}
    assert {"U_H", "A_H", "multicontrol", "momentum_oracle"} <= names
    assert doc["failed"] is False


def test_loglog_slope_exact():
    ns = [3, 4, 5, 6, 7]
    assert loglog_slope(ns, [7 * n ** 2 for n in ns]) == pytest.approx(2.0)
