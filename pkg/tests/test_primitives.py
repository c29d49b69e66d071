import itertools

import numpy as np
import pytest

from hamforge.circuit import count_resources, gate_matrix
from hamforge.errors import NaNAngle
from hamforge.primitives import (binary_norm_bound, build_banded_sparse_access, build_binary_norm_prep,
                                 build_modular_adder, build_momentum_oracle, build_multicontrol,
                                 build_state_prep, single_gate_circuit, solve_binary_norm_angles)
from hamforge.resources import check_bounds
from hamforge.reference import (build_p_matrix, make_pattern, matrix_power_banded, popcount,
                                walsh_coefficients)
from hamforge.sim import StateVector, apply_circuit, extract_transition, run_columns
from hamforge.spec_model import GridSpec

from conftest import place


def adder_ok(n):
    c = build_modular_adder(n)
    N = c.n_qubits
    ins, exp = [], []
    for i in range(1 << n):
        for j in range(1 << n):
            ins.append(place(c, target=i, addend=j))
            exp.append(place(c, target=(i + j) % (1 << n), addend=j))
    keys, amps = run_columns(c, ins)
    return (len(keys) == len(ins) and np.array_equal(keys & ((1 << N) - 1), np.array(exp))
            and np.allclose(amps, 1))


@pytest.mark.parametrize("n", [1, 2, 3])
def test_adder_small(n):
    assert adder_ok(n)


def test_adder_counts():
    assert count_resources(build_modular_adder(3)) == (32, 34, 1)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_multicontrol_x_all_patterns(m):
    for pat in itertools.product([0, 1], repeat=m):
        c = build_multicontrol(pat, single_gate_circuit("x"))
        want = int("".join(map(str, pat)), 2)
        for ctrl in range(1 << m):
            for t in (0, 1):
                keys, amps = run_columns(c, [place(c, ctrl=ctrl, t=t)])
                flip = ctrl == want
                assert len(keys) == 1 and abs(amps[0] - 1) < 1e-12
                assert int(keys[0]) == place(c, ctrl=ctrl, t=t ^ flip)


def test_multicontrol_rotation():
    R = gate_matrix("ry", (0.7,))
    c = build_multicontrol("10", single_gate_circuit("ry", (0.7,)))
    N = c.n_qubits
    for ctrl in range(4):
        for t in (0, 1):
            keys, amps = run_columns(c, [place(c, ctrl=ctrl, t=t)])
            out = dict(zip((keys & ((1 << N) - 1)).tolist(), amps))
            if ctrl == 2:
                for tt in (0, 1):
                    assert abs(out.get(place(c, ctrl=ctrl, t=tt), 0) - R[tt, t]) < 1e-12
            else:
                assert abs(out[place(c, ctrl=ctrl, t=t)] - 1) < 1e-12


def test_banded_access_example():
    pat = make_pattern(3, [0, 1, 7], [1, 2, 3])
    c = build_banded_sparse_access(pat, 3)
    keys, _ = run_columns(c, [place(c, sparse=2, base=3)])
    from conftest import field_value
    assert field_value(c, "sparse", int(keys[0])) == 2  # r_2 = 7, 7 + 3 = 10 = 2 mod 8


@pytest.mark.parametrize("n,l", [(2, 1), (3, 2), (4, 1)])
def test_banded_access_exhaustive(n, l, rng):
    offs = rng.choice(1 << n, 1 << l, replace=False)
    pat = make_pattern(n, offs, l=l)
    c = build_banded_sparse_access(pat, n)
    N = c.n_qubits
    ins, exp = [], []
    for s in range(1 << l):
        for i in range(1 << n):
            ins.append(place(c, sparse=s, base=i))
            exp.append(place(c, sparse=(pat.slots[s] + i) % (1 << n), base=i))
    keys, amps = run_columns(c, ins)
    assert np.array_equal(keys & ((1 << N) - 1), np.array(exp)) and np.allclose(amps, 1)


@pytest.mark.parametrize("w", [0, 1, 2, 3])
def test_state_prep_exact(w, rng):
    a = rng.normal(size=1 << w) + 1j * rng.normal(size=1 << w)
    a /= np.linalg.norm(a)
    c = build_state_prep(a)
    v = apply_circuit(c, StateVector.basis(c.n_qubits, 0)).amplitudes
    stride = 1 << (c.n_qubits - w)
    assert np.abs(v[::stride][:1 << w] - a).max() < 1e-12


def random_beta(rng, n, chi):
    b = np.array([rng.normal() if popcount(i) <= chi else 0.0 for i in range(1 << n)])
    return b / np.linalg.norm(b)


@pytest.mark.parametrize("method", ["ratio", "tree"])
@pytest.mark.parametrize("n,chi", [(3, 1), (4, 2)])
def test_binary_norm_routes(method, n, chi, rng):
    beta = random_beta(rng, n, chi)
    table = solve_binary_norm_angles(beta, n, chi, method)
    c = build_binary_norm_prep(table, n, chi)
    keys, amps = run_columns(c, [0])
    N = c.n_qubits
    v = np.zeros(1 << N, complex)
    v[keys] = amps
    assert np.abs(v.reshape(1 << n, -1)[:, 0] - beta).max() < 1e-10
    one, cx, _ = count_resources(c)
    assert (one, cx) == binary_norm_bound(n, chi)


def test_symmetric_grid_needs_tree_route():
    w = walsh_coefficients(GridSpec(3, -1, 1).points(), [0, 1])
    with pytest.raises(NaNAngle):
        solve_binary_norm_angles(w.beta, 3, 1, "ratio")
    assert solve_binary_norm_angles(w.beta, 3, 1, "tree").route == "tree"


@pytest.mark.parametrize("n,m", [(2, 1), (3, 2), (3, 3)])
def test_momentum_oracle_values(n, m):
    _, pat = matrix_power_banded(build_p_matrix(GridSpec(n, -1, 1)), m)
    mo = build_momentum_oracle(pat, None, m)
    B = extract_transition(mo.circuit, "s", "s").block
    assert np.abs(np.diag(B) * mo.scale - np.array(pat.slot_values)).max() < 1e-12
    bare = build_momentum_oracle(pat, None, m, with_phase=False).circuit
    assert check_bounds(bare, "momentum_oracle", {"l": pat.l}).status == "pass"
