import itertools

import numpy as np
import pytest

from hamforge.circuit import (Builder, Circuit, compose, controlled_of, count_resources, export_gates,
                              inverse_of, parse_gates, toffoli, transpose_of)
from hamforge.errors import NameCollision, WidthMismatch
from hamforge.sim import circuit_unitary

KINDS = [("h", ()), ("x", ()), ("y", ()), ("z", ()), ("s", ()), ("sdg", ()), ("rx", (0.3,)),
         ("ry", (0.7,)), ("rz", (1.1,)), ("u3", (0.4, 1.2, -0.5)), ("u3", (0, 0, 0.9)), ("gphase", (0.8,))]


def random_circuit(rng, n=5, size=150):
    b = Builder()
    b.add_register("q", n)
    for _ in range(size):
        if rng.random() < 0.3:
            a, c = rng.choice(n, 2, replace=False)
            b.cx(int(a), int(c))
        else:
            k, p = KINDS[rng.integers(len(KINDS))]
            b.add(k, () if k == "gphase" else (int(rng.integers(n)),), p)
    return b.finalize()


@pytest.mark.parametrize("pa,pb", list(itertools.product([True, False], repeat=2)))
def test_toffoli_polarities(pa, pb):
    b = Builder()
    b.add_register("q", 3)
    toffoli(b, 0, 1, 2, pa, pb)
    c = b.finalize()
    U = circuit_unitary(c)
    E = np.eye(8, dtype=complex)
    for i in range(8):
        if (i >> 2) & 1 == pa and (i >> 1) & 1 == pb:
            E[:, i] = 0
            E[i ^ 1, i] = 1
    assert np.abs(U - E).max() < 1e-12
    assert c.counts == (8, 6)


@pytest.mark.parametrize("kind,params", KINDS + [("cx", ())])
def test_controlled_of(kind, params):
    b = Builder()
    b.add_register("q", 2)
    if kind == "gphase":
        b.add(kind, (), params)
    elif kind == "cx":
        b.cx(0, 1)
    else:
        b.add(kind, (1,), params)
    base = b.finalize()
    cc = controlled_of(base)
    U, V = circuit_unitary(cc), circuit_unitary(base)
    E = np.zeros((8, 8), complex)
    for i in range(8):
        for j in range(8):
            if i & 1 == j & 1:
                E[i, j] = V[i >> 1, j >> 1] if i & 1 else float(i == j)
    assert np.abs(U - E).max() < 1e-12


def test_inverse_transpose_roundtrip(rng):
    c = random_circuit(rng)
    U = circuit_unitary(c)
    assert np.abs(circuit_unitary(compose(c, inverse_of(c))) - np.eye(32)).max() < 1e-12
    assert np.abs(circuit_unitary(transpose_of(c)) - U.T).max() < 1e-12
    assert parse_gates(export_gates(c)) == c


def test_export_is_deterministic(rng):
    c = random_circuit(rng)
    assert export_gates(c) == export_gates(parse_gates(export_gates(c)))


def test_builder_pool_and_errors():
    b = Builder()
    q = b.add_register("q", 2)
    with pytest.raises(NameCollision):
        b.add_register("q", 1)
    anc = b.borrow(2)
    b.cx(q[0], anc[0])
    b.cx(q[0], anc[0])
    b.release(2)
    c = b.finalize()
    assert c.reg("anc").kind == "pure" and c.reg("anc").width == 2
    assert count_resources(c) == (0, 2, 2)
    sub = Circuit(c.registers, [])
    with pytest.raises(WidthMismatch):
        Builder().embed(sub, {"q": [0]})


def test_gphase_counts_zero():
    b = Builder()
    b.add_register("q", 1)
    b.gphase(0.3)
    b.h(0)
    assert b.finalize().counts == (1, 0)
