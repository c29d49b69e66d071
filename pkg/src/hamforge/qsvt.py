"""Amplitude-to-diagonal block-encodings, QSVT phase factors and polynomial oracles."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import least_squares

from .circuit import Builder, Circuit, inverse_of, toffoli
from .errors import BoundViolation, NaNAngle, NonConvergence, ZeroLeadingAmplitude
from .primitives import (emit_binary_norm_prep, emit_controlled, emit_mcx, solve_binary_norm_angles)
from .reference import walsh_coefficients
from .sim import BlockEncodingDescriptor, describe, extract_transition
from .spec_model import GridSpec, Polynomial, check_parity

SOLVER_TOL = 1e-10
PHASE_BOUND = 1.0 - 1e-8
VERIFY_NODES = 201


# ------------------------------------------------ diagonal amplitude encoding

def _controlled_reflection(b: Builder, f: int, on: int, zero_regs: list[int]) -> None:
    """Phase -1 iff f == on and every qubit in ``zero_regs`` is |0>."""
    if not on:
        b.x(f)
    b.h(f)
    emit_mcx(b, zero_regs, [False] * len(zero_regs), f)
    b.h(f)
    if not on:
        b.x(f)


def _emit_W(b: Builder, prep: Circuit, A: list[int], c: int, D: list[int], s_ctrl: int | None,
            p_const: int, adjoint: bool) -> None:
    """W_p = H_c S_c^p Copy U_C H_c on (A, c, D); ``s_ctrl`` selects p by a qubit."""
    wiring = {prep.registers[0].name: A}
    inv = inverse_of(prep) if adjoint else prep

    def uc():
        emit_controlled(b, inv, wiring, [c], [False])

    def copy():
        for a, d in zip(A, D):
            toffoli(b, c, d, a)

    def sgate(dag: bool):
        if s_ctrl is None:
            if p_const:
                (b.sdg if dag else b.s)(c)
        else:
            # controlled-S (or S^dag): diag phase i^{+-1} on |11>
            lam = -math.pi / 2 if dag else math.pi / 2
            b.phase(s_ctrl, lam / 2)
            b.phase(c, lam / 2)
            b.cx(s_ctrl, c)
            b.phase(c, -lam / 2)
            b.cx(s_ctrl, c)

    if not adjoint:
        b.h(c); uc(); copy(); sgate(False); b.h(c)
    else:
        b.h(c); sgate(True); copy(); uc(); b.h(c)


def build_diag_amplitude_be(prep: Circuit, real_only: bool = True) -> tuple[Circuit, BlockEncodingDescriptor]:
    """Block-encode diag(psi) where psi = prep|0>.

    ``prep``'s first register is the h-qubit state register; extra pure
    registers are borrowed.  ``real_only`` encodes diag(Re psi) with scale 1;
    otherwise the real/imaginary branches are combined with an extra LCU
    qubit, giving scale 2.  The select qubit ``sig`` alone certifies the block:
    whenever it returns to |0> the ``work``/``mid`` qubits are |0> as well, so
    they are reported as flag qubits but are not needed by projector phases.
    """
    h = prep.registers[0].width
    b = Builder()
    lcu = None if real_only else b.add_register("lcu", 1, "flag")[0]
    (f,) = b.add_register("sig", 1, "flag")
    A = b.add_register("work", h, "flag")
    (c,) = b.add_register("mid", 1, "flag")
    D = b.add_register("data", h, "data")
    if lcu is not None:
        b.h(lcu)
    b.h(f)
    _controlled_reflection(b, f, 1, A + [c])
    _emit_W(b, prep, A, c, D, lcu, 0, adjoint=False)
    b.z(c)
    _emit_W(b, prep, A, c, D, lcu, 0, adjoint=True)
    _controlled_reflection(b, f, 0, A + [c])
    b.h(f)
    b.x(f); b.z(f); b.x(f)
    if lcu is not None:
        b.s(lcu)
        b.h(lcu)
    circ = b.finalize()
    scale = 1.0 if real_only else 2.0
    return circ, describe(circ, scale, "data", signal="sig", claimed_scale=scale)


@dataclass
class AmplitudeOracle:
    circuit: Circuit
    descriptor: BlockEncodingDescriptor
    n_x: float
    route: str


def coordinate_prep(grid: GridSpec) -> tuple[Circuit, float, str]:
    """U_x|0> = sum_i (x_i / N_x)|i>: binary-norm preparation of the Walsh image, then H^n."""
    xs = grid.points()
    w = walsh_coefficients(xs, [0.0, 1.0])
    try:
        table = solve_binary_norm_angles(w, grid.n, 1, "ratio")
    except (ZeroLeadingAmplitude, NaNAngle):
        table = solve_binary_norm_angles(w, grid.n, 1, "tree")
    b = Builder()
    qs = b.add_register("state", grid.n)
    emit_binary_norm_prep(b, qs, table)
    for q in qs:
        b.h(q)
    return b.finalize(), float(np.linalg.norm(xs)), table.route


CLAIMED_X_SCALE = math.sqrt(2.0)


@lru_cache(maxsize=32)
def build_x_amplitude_oracle(grid: GridSpec) -> tuple[Circuit, BlockEncodingDescriptor]:
    """Block-encoding of diag(x); the descriptor scale is calibrated by simulation."""
    prep, nx, route = coordinate_prep(grid)
    circ, d = build_diag_amplitude_be(prep, real_only=True)
    xs = grid.points()
    k = int(np.argmax(np.abs(xs)))
    blk = extract_transition(circ, "data", "data", check=True).block
    measured = float(xs[k] / blk[k, k].real)
    desc = describe(circ, measured, "data", signal="sig", n_x=nx, prep_route=route,
                    claimed_scale=CLAIMED_X_SCALE * nx, measured_ratio=measured / nx)
    return circ, desc


# ----------------------------------------------------------- phase solving

@dataclass
class PhaseSequence:
    phis: np.ndarray
    target_poly: Polynomial
    residual: float
    degree: int

    def to_json(self) -> dict:
        return {"degree": self.degree, "phis": [float(p) for p in self.phis], "residual": self.residual}


def qsp_reflection_eval(phis: np.ndarray, xs: np.ndarray, degree: int | None = None) -> np.ndarray:
    """(0,0) entry of prod_j e^{i phi_j Z} R(x), R = [[x, s], [s, -x]] (scalar trust anchor)."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    if degree == 0:
        return np.full(xs.shape, np.exp(1j * phis[0]))
    s = np.sqrt(np.clip(1 - xs * xs, 0, None))
    U = np.broadcast_to(np.eye(2, dtype=complex), xs.shape + (2, 2)).copy()
    R = np.empty(xs.shape + (2, 2), dtype=complex)
    R[..., 0, 0] = xs; R[..., 0, 1] = s; R[..., 1, 0] = s; R[..., 1, 1] = -xs
    for p in phis:
        ph = np.array([np.exp(1j * p), np.exp(-1j * p)])
        U = (U * ph[None, :]) @ R
    return U[..., 0, 0]


def _wx_eval(psi: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """(0,0) entry of e^{i psi_0 Z} prod_j W(x) e^{i psi_j Z}, W = [[x, i s], [i s, x]]."""
    s = np.sqrt(np.clip(1 - xs * xs, 0, None))
    W = np.empty(xs.shape + (2, 2), dtype=complex)
    W[..., 0, 0] = xs; W[..., 1, 1] = xs; W[..., 0, 1] = 1j * s; W[..., 1, 0] = 1j * s
    U = np.zeros(xs.shape + (2, 2), dtype=complex)
    U[..., 0, 0] = np.exp(1j * psi[0]); U[..., 1, 1] = np.exp(-1j * psi[0])
    for p in psi[1:]:
        U = (U @ W) * np.array([np.exp(1j * p), np.exp(-1j * p)])[None, :]
    return U[..., 0, 0]


def _wx_to_reflection(psi: np.ndarray) -> np.ndarray:
    d = len(psi) - 1
    phi = np.empty(d)
    phi[1:] = psi[1:d] - np.pi / 2
    phi[0] = psi[0] + psi[d] + d * np.pi / 2 - np.pi / 2
    return np.array([math.remainder(v, 2 * math.pi) for v in phi])


def chebyshev_nodes(k: int) -> np.ndarray:
    return np.cos((2 * np.arange(1, k + 1) - 1) * np.pi / (2 * k))


def solve_qsvt_phases(p: Polynomial, tol: float = SOLVER_TOL) -> PhaseSequence:
    """Phases whose reflection-convention QSP product has real part p on [-1, 1].

    Least-squares over symmetric phase vectors in the W(x) convention at the
    positive Chebyshev nodes, continued from 0.25 p to p, then converted.
    """
    check_parity(p)
    sup = float(np.max(np.abs(p(np.linspace(-1, 1, 10_001)))))
    if sup > PHASE_BOUND + 1e-13:
        raise BoundViolation(f"sup |p| = {sup:.17g} exceeds {PHASE_BOUND}")
    d = p.degree
    check = chebyshev_nodes(VERIFY_NODES)
    if d == 0:
        phis = np.array([math.acos(p.coeffs[0])])
        res = float(np.max(np.abs(qsp_reflection_eval(phis, check, 0).real - p(check))))
        return PhaseSequence(phis, p, res, 0)
    nh = (d + 2) // 2
    dt = 2 * nh
    xs = np.cos((2 * np.arange(1, dt + 1) - 1) * np.pi / (4 * dt))
    fx = p(xs)

    def full(hh):
        return np.concatenate([hh, hh[::-1]]) if (d + 1) % 2 == 0 else np.concatenate([hh, hh[-2::-1]])

    hh = np.zeros(nh)
    hh[0] = np.pi / 4
    for lam in np.linspace(0.25, 1.0, 4):
        r = least_squares(lambda v: _wx_eval(full(v), xs).real - lam * fx, hh, method="trf",
                          xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=100_000)
        hh = r.x
    phis = _wx_to_reflection(full(hh))
    res = float(np.max(np.abs(qsp_reflection_eval(phis, check).real - p(check))))
    if not res <= tol:
        raise NonConvergence(f"phase residual {res:.3e} exceeds {tol:.1e} (degree {d})")
    return PhaseSequence(phis, p, res, d)


# ------------------------------------------------------ alternating sequence

def emit_alternating(b: Builder, base: Circuit, wiring: dict, seq: PhaseSequence,
                     phase_fn) -> int:
    """Interleave base / base^dag with projector phases; returns the query count.

    ``phase_fn(phi)`` emits e^{i phi (2 Pi - I)} for the encoding's projector.
    """
    if seq.degree == 0:
        phase_fn(float(seq.phis[0]))
        return 0
    inv = inverse_of(base)
    d = seq.degree
    for k in range(1, d + 1):
        b.embed(base if k % 2 else inv, wiring)
        phase_fn(float(seq.phis[d - k]))
    return d


def build_alternating_sequence(base: Circuit, desc: BlockEncodingDescriptor, seq: PhaseSequence) -> Circuit:
    """QSVT sequence over a block-encoding whose signal register is a single qubit."""
    sig = desc.extra.get("signal", desc.flag_registers[0])
    b = Builder()
    for r in base.registers:
        if r.kind != "pure":
            b.add_register(r.name, r.width, r.kind)
    (fq,) = b.qubits(sig)
    emit_alternating(b, base, {r.name: r.name for r in base.registers if r.kind != "pure"}, seq,
                     lambda phi: b.rz(fq, -2 * phi))
    return b.finalize()


# ------------------------------------------------ coordinate polynomial oracle

@dataclass
class PolynomialOracle:
    circuit: Circuit
    descriptor: BlockEncodingDescriptor
    c_x: float
    c_P: float
    phases: PhaseSequence


def rescale_for_signal(p: Polynomial, c_x: float) -> tuple[Polynomial, float]:
    """P~(y) = P(c_x y)/c_P with c_P >= 1 chosen so that |P~| <= 1 - 1e-8 on [-1, 1]."""
    pt = p.scaled_argument(c_x)
    sup = float(np.max(np.abs(pt(np.linspace(-1, 1, 10_001)))))
    c_P = max(1.0, sup / PHASE_BOUND)
    return (pt.scaled(1.0 / c_P) if c_P > 1.0 else pt), c_P


@lru_cache(maxsize=64)
def build_coordinate_polynomial_oracle(grid: GridSpec, p: Polynomial) -> PolynomialOracle:
    """Block-encoding of diag(P(x_i)) / c_P: real part of a QSVT sequence over O_x."""
    if p.degree == 0:
        c_x = 1.0
        base = None
    else:
        base, bdesc = build_x_amplitude_oracle(grid)
        c_x = bdesc.scale
    ptil, c_P = rescale_for_signal(p, c_x)
    seq = solve_qsvt_phases(ptil)
    b = Builder()
    (lcu,) = b.add_register("lcu", 1, "flag")
    (f,) = b.add_register("sig", 1, "flag")
    b.add_register("work", grid.n, "flag")
    b.add_register("mid", 1, "flag")
    b.add_register("data", grid.n, "data")
    b.h(lcu)

    def phase(phi):
        b.cx(lcu, f)
        b.rz(f, -2 * phi)
        b.cx(lcu, f)
    wiring = {} if base is None else {r.name: r.name for r in base.registers if r.kind != "pure"}
    emit_alternating(b, base, wiring, seq, phase)
    b.h(lcu)
    circ = b.finalize()
    desc = describe(circ, c_P, "data", signal="sig", c_x=c_x, c_P=c_P, degree=p.degree)
    return PolynomialOracle(circ, desc, c_x, c_P, seq)
