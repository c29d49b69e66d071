"""e^{itH} from U_H via truncated Jacobi-Anger QSVT, against scipy's expm."""
import numpy as np
import scipy.linalg as sla

from hamforge import simple_spec
from hamforge.assembly import build_U_H
from hamforge.evolution import build_evolution_be, truncation_degree
from hamforge.reference import build_hamiltonian_dense
from hamforge.sim import extract_block

spec = simple_spec(2, [(1.0, [0, 0.9], 1)])
H = build_hamiltonian_dense(spec)
alpha = build_U_H(spec)[1].scale

for tau in (0.5, 1.0, 2.0):
    t = tau / alpha
    eps = 1e-3
    circ, desc = build_evolution_be(spec, t, eps)
    U = desc.scale * extract_block(circ, desc).block
    err = np.linalg.norm(sla.expm(1j * t * H) - U, 2)
    g = truncation_degree(tau, eps)
    print(f"alpha*t={tau}: g={g.g} (estimate {g.estimate:.2f}), queries {desc.extra['queries']}, "
          f"qubits {circ.n_qubits}, error {err:.2e} <= {eps}")
