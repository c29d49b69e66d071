"""Block-encoding of e^{itH} by truncated Jacobi-Anger QSVT over U_H."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import chebyshev as cheb

from .assembly import build_U_H
from .circuit import Builder, Circuit, inverse_of
from .errors import DomainError, TractabilityError
from .primitives import emit_controlled, emit_mcx
from .qsvt import PHASE_BOUND, PhaseSequence, solve_qsvt_phases
from .sim import BlockEncodingDescriptor, describe
from .spec_model import HamiltonianSpec, Polynomial

TAU_CAP = 4.0
_SUP_GRID = np.linspace(-1.0, 1.0, 20_001)


@dataclass(frozen=True)
class TruncationDegree:
    g: int
    alpha_t: float
    eps: float
    estimate: float   # asymptotic alpha t + ln(1/eps) / ln(e + ln(1/eps) / alpha t)


def truncation_bound(alpha_t: float, g: int) -> float:
    return 1.07 / math.sqrt(g) * (abs(alpha_t) * math.e / (2 * g)) ** g


def truncation_degree(alpha_t: float, eps: float) -> TruncationDegree:
    """Least g with (1.07/sqrt g)(alpha e t / 2g)^g <= eps, by direct scan."""
    if not alpha_t > 0:
        raise DomainError(f"alpha_t must be positive, got {alpha_t}")
    if not 0 < eps < 1:
        raise DomainError(f"eps must lie in (0, 1), got {eps}")
    g = 1
    while truncation_bound(alpha_t, g) > eps:
        g += 1
    L = math.log(1 / eps)
    return TruncationDegree(g, alpha_t, eps, alpha_t + L / math.log(math.e + L / alpha_t))


def bessel_j(n: int, z: float) -> float:
    """J_n(z) from its power series; accurate to ~1e-13 for |z| <= 8."""
    h = z / 2.0
    term = h ** n / math.factorial(n)
    total, k = term, 0
    while True:
        term *= -h * h / ((k + 1) * (k + 1 + n))
        total += term
        k += 1
        if k > abs(z) and abs(term) < 1e-18 * max(abs(total), 1e-300):
            return total
        if k > 200:
            return total


def _scaled(coeffs_cheb: np.ndarray) -> tuple[Polynomial, float]:
    mono = cheb.cheb2poly(coeffs_cheb)
    sup = float(np.max(np.abs(np.polynomial.polynomial.polyval(_SUP_GRID, mono))))
    f = min(1.0, PHASE_BOUND / sup) if sup > 0 else 1.0
    return Polynomial(tuple(float(c) * f for c in mono)), f


def jacobi_anger_polys(alpha_t: float, g: TruncationDegree | int) -> tuple[Polynomial, Polynomial]:
    """Truncated cos(alpha_t y) (even) and sin(alpha_t y) (odd) in the monomial basis."""
    gd = g.g if isinstance(g, TruncationDegree) else int(g)
    ce = np.zeros(gd + 1)
    co = np.zeros(gd + 1)
    ce[0] = bessel_j(0, alpha_t)
    for k in range(1, gd // 2 + 1):
        ce[2 * k] = 2 * (-1) ** k * bessel_j(2 * k, alpha_t)
    for k in range((gd - 1) // 2 + 1):
        co[2 * k + 1] = 2 * (-1) ** k * bessel_j(2 * k + 1, alpha_t)
    return _scaled(ce)[0], _scaled(co)[0]


@dataclass
class EvolutionPlan:
    tau: float
    degree: TruncationDegree | None
    even: PhaseSequence | None
    odd: PhaseSequence | None
    queries: int


def _emit_projector_phase(b: Builder, flags: list[int], anc: int, bq: int, cq: int,
                          phi_even: float, phi_odd: float) -> None:
    """e^{i theta (2 Pi - I)} on the all-zero flag space, theta = (-1)^c phi_b."""
    if phi_even == 0.0 and phi_odd == 0.0:
        return
    emit_mcx(b, flags, [False] * len(flags), anc)
    s, d = phi_even + phi_odd, phi_even - phi_odd
    b.cx(cq, anc); b.rz(anc, s); b.cx(cq, anc)
    b.cx(bq, anc); b.cx(cq, anc); b.rz(anc, d); b.cx(cq, anc); b.cx(bq, anc)
    emit_mcx(b, flags, [False] * len(flags), anc)


def build_evolution_be(spec: HamiltonianSpec, t: float, eps: float) -> tuple[Circuit, BlockEncodingDescriptor]:
    """(2, s+2, eps)-block-encoding of e^{itH}: block = (E(H/a) + i O(H/a)) / 2."""
    uh, ud = build_U_H(spec)
    alpha = ud.scale
    tau = alpha * t
    if abs(tau) > TAU_CAP:
        raise TractabilityError(f"alpha*|t| = {abs(tau):.4g} exceeds the cap {TAU_CAP}")
    b = Builder()
    keep = [r for r in uh.registers if r.kind != "pure"]
    for r in keep:
        b.add_register(r.name, r.width, r.kind)
    (bq,) = b.add_register("par", 1, "flag")
    (cq,) = b.add_register("conj", 1, "flag")
    wiring = {r.name: r.name for r in keep}
    if tau == 0:
        b.ry(bq, 2 * math.pi / 3)    # <0|ry|0> = 1/2
        circ = b.finalize()
        return circ, describe(circ, 2.0, ud.data_register, eps, g=1, tau=0.0, queries=0,
                              alpha=alpha)
    deg = truncation_degree(abs(tau), eps)
    even, odd = jacobi_anger_polys(tau, deg)
    se, so = solve_qsvt_phases(even), solve_qsvt_phases(odd)
    flags = [q for r in keep if r.kind == "flag" for q in b.qubits(r.name)]
    anc = b.borrow(1)[0]
    D = max(se.degree, so.degree)

    def phase_at(seq: PhaseSequence, k: int) -> float:
        # phase applied after the k-th query (k = 0: before any query)
        if seq.degree == 0:
            return float(seq.phis[0]) if k == 0 else 0.0
        return float(seq.phis[seq.degree - k]) if 1 <= k <= seq.degree else 0.0

    b.h(bq); b.h(cq)
    inv = inverse_of(uh)
    _emit_projector_phase(b, flags, anc, bq, cq, phase_at(se, 0), phase_at(so, 0))
    long_odd = so.degree > se.degree
    for k in range(1, D + 1):
        base = uh if k % 2 else inv
        if k == D and se.degree != so.degree:
            emit_controlled(b, base, wiring, [bq], [long_odd])
        else:
            b.embed(base, wiring)
        _emit_projector_phase(b, flags, anc, bq, cq, phase_at(se, k), phase_at(so, k))
    b.release(1)
    b.s(bq)
    b.h(bq); b.h(cq)
    circ = b.finalize()
    return circ, describe(circ, 2.0, ud.data_register, eps, g=deg.g, tau=tau, queries=D,
                          degree_even=se.degree, degree_odd=so.degree, alpha=alpha,
                          phase_residual=max(se.residual, so.residual))
