import math

import numpy as np
import pytest

from hamforge.assembly import (P_THEN_POLY, POLY_THEN_P, build_A_H, build_one_term_aux,
                               build_one_term_aux_multidim, build_U_H, check_sparsity,
                               index_transition, momentum_bands, plan_one_mode)
from hamforge.errors import HermiticityError
from hamforge.reference import build_hamiltonian_dense, term_matrices
from hamforge.sim import extract_block, leak_probe, pure_leak
from hamforge.spec_model import GridSpec, Polynomial, Term, parse_spec, simple_spec

from conftest import CORPUS, DMODE_DOC, corpus_spec, dmode_spec


@pytest.mark.parametrize("ordering", [POLY_THEN_P, P_THEN_POLY])
@pytest.mark.parametrize("n,coeffs,m", [(2, [0, 0.9], 1), (3, [0.3, 0, 0.5], 2), (3, [0, 0.9], 3)])
def test_one_term_aux(ordering, n, coeffs, m):
    g = GridSpec(n, -1, 1)
    term = Term(1.0, Polynomial(tuple(coeffs)), m)
    c, d = build_one_term_aux(g, term, ordering)
    X = term_matrices(g, term.poly, m)[0 if ordering == POLY_THEN_P else 1]
    B = index_transition(c)
    assert np.abs(d.extra["sign"] * d.scale * B - X).max() < 1e-11


def test_momentum_bands_widths():
    bd = momentum_bands(GridSpec(3, -1, 1), 1)
    # central difference: no diagonal, one band on each side
    assert bd.offsets == (1, 7) and bd.l == 1
    assert momentum_bands(GridSpec(3, -1, 1), 2).offsets == (0, 2, 6)


@pytest.mark.parametrize("entry", CORPUS[:2] + CORPUS[4:6], ids=lambda e: e[0])
def test_A_H_block(entry):
    spec = corpus_spec(entry)
    c, d, ledger = build_A_H(spec)
    H = build_hamiltonian_dense(spec)
    assert np.abs(d.scale * index_transition(c) - H).max() < 1e-10
    assert d.scale == pytest.approx(ledger.N_H)


def test_ledger_normalization():
    spec = simple_spec(3, [(1.0, [0, 0.9], 1), (0.4, [0.1, 0, 0.5], 2)])
    plan = plan_one_mode(spec)
    led = plan.ledger
    assert led.N_H == pytest.approx(2 * sum(abs(t.alpha) * t.weight for t in led.terms))
    assert np.linalg.norm(plan.amps) == pytest.approx(1.0)
    doc = led.to_json()
    assert [t["synthetic"] for t in doc["terms"]] == [False, False]


@pytest.mark.parametrize("entry", CORPUS[:2] + CORPUS[3:5], ids=lambda e: e[0])
def test_U_H_block(entry):
    spec = corpus_spec(entry)
    c, d = build_U_H(spec)
    r = extract_block(c, d)
    assert np.abs(d.scale * r.block - build_hamiltonian_dense(spec)).max() < 1e-10
    assert r.leak < 1e-10
    assert d.scale == pytest.approx(math.sqrt(2 ** d.extra["l"]) * d.extra["N_H"])


def test_U_H_pure_exact_small():
    c, _ = build_U_H(simple_spec(2, [(1.0, [0, 0.9], 1)]))
    assert pure_leak(c) < 1e-12


def test_U_H_pure_probe():
    c, _ = build_U_H(simple_spec(3, [(1.0, [0, 0.9], 1)]))
    assert leak_probe(c) < 1e-10


def test_synthetic_padding_three_terms():
    spec = simple_spec(2, [(1.0, [0, 0.9], 1), (0.3, [0.2, 0, 0.5], 2), (0.2j, [0, 0.5], 1)])
    assert spec.gamma == 2 and sum(t.synthetic for t in spec.terms) == 1
    c, d = build_U_H(spec)
    assert np.abs(d.scale * extract_block(c, d).block - build_hamiltonian_dense(spec)).max() < 1e-10


def test_multidim_aux_and_U_H():
    spec = dmode_spec()
    H = build_hamiltonian_dense(spec)
    c, d = build_U_H(spec)
    r = extract_block(c, d)
    assert np.abs(d.scale * r.block - H).max() < 1e-10
    for k, t in enumerate(spec.multi_terms):
        ca, da = build_one_term_aux_multidim(spec, k)
        assert ca.reg("col").width == 4
        assert da.extra["sign"] == 1


def test_multidim_rejects_non_hermitian():
    doc = {**DMODE_DOC, "multi_terms": DMODE_DOC["multi_terms"][:1]}
    with pytest.raises(HermiticityError):
        parse_spec(doc)


def test_check_sparsity():
    spec = simple_spec(3, [(1.0, [0, 0.9], 1), (0.4, [0.1, 0, 0.5], 2)])
    info = check_sparsity(spec)
    assert info["within_bound"] and info["bands"] == 5
