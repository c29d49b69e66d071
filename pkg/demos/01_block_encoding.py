"""Build U_H for a two-term Hamiltonian and check its block against the dense matrix.

H = alpha_1 (x p + p x) + alpha_2 (P2(x) p^2 + p^2 P2(x)) on an 8-point grid.
"""
import numpy as np

from hamforge import simple_spec
from hamforge.assembly import build_U_H, check_sparsity
from hamforge.circuit import count_resources
from hamforge.reference import build_hamiltonian_dense
from hamforge.sim import extract_block

spec = simple_spec(3, [(1.0, [0, 0.9], 1), (0.4, [0.1, 0, 0.5], 2)])
H = build_hamiltonian_dense(spec)
circ, desc = build_U_H(spec)

print(f"qubits {circ.n_qubits}, flag qubits {desc.flag_qubits}, scale {desc.scale:.6f}")
print("one-qubit / cx / pure ancillas:", count_resources(circ))
print("band structure:", check_sparsity(spec, H))

res = extract_block(circ, desc)
err = np.linalg.norm(H - desc.scale * res.block, 2)
print(f"||H - scale * block||_2 = {err:.2e}   pure-ancilla leak {res.leak:.1e}")
print("normalization ledger:")
for t in desc.extra["ledger"]["terms"]:
    print(f"  term {t['index']}: m={t['m']} l={t['l']} N_pm={t['N_pm']} c_P={t['c_P']} weight={t['weight']:.4f}")
