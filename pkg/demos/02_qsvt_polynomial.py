"""Diagonal polynomial of the position grid via QSVT, compared with scalar QSP."""
import numpy as np

from hamforge.qsvt import (build_alternating_sequence, build_coordinate_polynomial_oracle,
                           build_x_amplitude_oracle, qsp_reflection_eval, solve_qsvt_phases)
from hamforge.sim import extract_block
from hamforge.spec_model import GridSpec, Polynomial

grid = GridSpec(3, -1.0, 1.0)
p = Polynomial((0.0, -0.25, 0.0, 0.5))

base, bd = build_x_amplitude_oracle(grid)
print(f"x oracle scale {bd.scale:.6f} (N_x = {bd.extra['n_x']:.6f})")

seq = solve_qsvt_phases(p)
print("phases:", np.round(seq.phis, 6), "residual", f"{seq.residual:.1e}")
circ = build_alternating_sequence(base, bd, seq)
diag = np.diag(extract_block(circ, bd).block)
want = qsp_reflection_eval(seq.phis, grid.points() / bd.scale, seq.degree)
print(f"circuit vs scalar QSP: {np.abs(diag - want).max():.1e}")

po = build_coordinate_polynomial_oracle(grid, p)
d = np.diag(extract_block(po.circuit, po.descriptor).block).real * po.descriptor.scale
print("P(x_i) from the oracle:", np.round(d, 6))
print("P(x_i) directly:       ", np.round(p(grid.points()), 6))
