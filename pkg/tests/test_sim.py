import numpy as np
import pytest

from hamforge.circuit import Builder
from hamforge.errors import AncillaLeak
from hamforge.sim import (StateVector, apply_circuit, apply_circuit_inplace, apply_circuit_sparse,
                          circuit_unitary, compare_blocks, describe, extract_block, extract_transition,
                          leak_probe, pure_leak, run_columns)
from test_circuit import random_circuit


def test_sparse_matches_dense(rng):
    c = random_circuit(rng, n=6, size=250)
    U = circuit_unitary(c)
    keys, amps = run_columns(c, np.arange(64))
    B = np.zeros((64, 64), complex)
    B[keys & 63, keys >> 6] = amps
    assert np.abs(U - B).max() < 1e-12


def test_three_engines_agree(rng):
    c = random_circuit(rng, n=5, size=120)
    psi = rng.normal(size=32) + 1j * rng.normal(size=32)
    psi /= np.linalg.norm(psi)
    a = apply_circuit(c, StateVector(psi.copy())).amplitudes
    b = apply_circuit_sparse(c, StateVector(psi.copy())).amplitudes
    d = apply_circuit_inplace(c, psi.copy())
    assert np.abs(a - b).max() < 1e-12 and np.abs(a - d).max() < 1e-12


def test_thread_setting_is_deterministic(monkeypatch, rng):
    c = random_circuit(rng, n=6, size=100)
    monkeypatch.setenv("HAMFORGE_THREADS", "1")
    k1, a1 = run_columns(c, np.arange(64))
    monkeypatch.setenv("HAMFORGE_THREADS", "4")
    k4, a4 = run_columns(c, np.arange(64))
    assert np.array_equal(k1, k4) and np.array_equal(a1, a4)


def leaky(angle):
    b = Builder()
    (d,) = b.add_register("data", 1)
    (f,) = b.add_register("f", 1, "flag")
    (p,) = b.add_register("p", 1, "pure")
    b.h(d)
    b.ry(p, angle)
    return b.finalize()


def test_extract_block_and_leak():
    c = leaky(0.0)
    desc = describe(c, 1.0, "data")
    r = extract_block(c, desc)
    H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    assert np.abs(r.block - H).max() < 1e-15 and r.leak == 0
    bad = leaky(1e-3)
    with pytest.raises(AncillaLeak):
        extract_block(bad, describe(bad, 1.0, "data"))
    assert pure_leak(bad) > 1e-4
    assert leak_probe(bad) > 1e-4 and leak_probe(c) == 0


def test_transition_between_registers():
    b = Builder()
    a = b.add_register("a", 2)
    o = b.add_register("o", 2)
    for x, y in zip(a, o):
        b.cx(x, y)
        b.cx(y, x)
    c = b.finalize()
    B = extract_transition(c, "a", "o").block
    assert np.allclose(B, np.eye(4))


def test_compare_blocks_report():
    rep = compare_blocks(np.eye(2), np.eye(2) + 1e-6, 1e-9)
    assert not rep.passed and rep.max_entry > 9e-7
