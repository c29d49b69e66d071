"""Low-level constructions: multi-controls, adder, banded access, state preparation,
uniformly controlled rotations and the momentum amplitude oracle.

Emitters named ``emit_*`` append to a :class:`Builder` using explicit qubit
lists (register order: most significant qubit first).  ``build_*`` functions wrap
them into standalone circuits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Sequence

import numpy as np

from .circuit import Builder, Circuit, Gate, controlled_gate, toffoli
from .errors import ComplexResidual, NaNAngle, PatternOverflow, ZeroLeadingAmplitude
from .reference import SparsityPattern, WalshCoefficients, popcount

CLIP_TOL = 1e-12


def _bits(pattern: str | Sequence[int]) -> list[bool]:
    return [c in (1, "1", True) for c in pattern]


# ---------------------------------------------------------- multi-control

def emit_mcx(b: Builder, controls: Sequence[int], pols: Sequence[bool], target: int) -> None:
    """X on ``target`` iff every control matches its polarity (2m-3 Toffolis, m-2 ancillas)."""
    m = len(controls)
    if m == 0:
        b.x(target)
    elif m == 1:
        b.cx(controls[0], target)
        if not pols[0]:
            b.x(target)
    elif m == 2:
        toffoli(b, controls[0], controls[1], target, pols[0], pols[1])
    else:
        anc = b.borrow(m - 2)
        steps = [(controls[0], controls[1], anc[0], pols[0], pols[1])]
        for k in range(2, m - 1):
            steps.append((controls[k], anc[k - 2], anc[k - 1], pols[k], True))
        for st in steps:
            toffoli(b, *st[:3], st[3], st[4])
        toffoli(b, controls[m - 1], anc[m - 3], target, pols[m - 1], True)
        for st in reversed(steps):
            toffoli(b, *st[:3], st[3], st[4])
        b.release(m - 2)


def emit_and(b: Builder, controls: Sequence[int], pols: Sequence[bool]) -> tuple[int, Callable[[], None]]:
    """Compute the AND of ``m >= 2`` polarity controls into a pool qubit.

    Returns the qubit and a callback that uncomputes it (m-1 Toffolis each way).
    """
    m = len(controls)
    anc = b.borrow(m - 1)
    steps = [(controls[0], controls[1], anc[0], pols[0], pols[1])]
    for k in range(2, m):
        steps.append((controls[k], anc[k - 2], anc[k - 1], pols[k], True))
    for st in steps:
        toffoli(b, *st[:3], st[3], st[4])

    def undo():
        for st in reversed(steps):
            toffoli(b, *st[:3], st[3], st[4])
        b.release(m - 1)
    return anc[m - 2], undo


def emit_controlled(b: Builder, sub: Circuit, wiring: dict, controls: Sequence[int],
                    pols: Sequence[bool]) -> None:
    """Apply ``sub`` (wired as in Builder.embed) iff the controls match ``pols``."""
    m = len(controls)
    if m == 0:
        b.embed(sub, wiring)
        return
    if m == 1:
        ctrl, undo = controls[0], None
        if not pols[0]:
            b.x(ctrl)
    else:
        ctrl, undo = emit_and(b, controls, pols)
    qmap = {}
    borrowed = 0
    for r in sub.registers:
        if r.name in wiring:
            tgt = wiring[r.name]
            qs = b.qubits(tgt) if isinstance(tgt, str) else list(tgt)
        else:
            qs = b.borrow(r.width)
            borrowed += r.width
        for k, q in enumerate(qs):
            qmap[r.start + k] = q
    for g in sub.gates:
        controlled_gate(b, Gate(g.kind, tuple(qmap[q] for q in g.qubits), g.params), ctrl)
    if borrowed:
        b.release(borrowed)
    if m == 1:
        if not pols[0]:
            b.x(ctrl)
    else:
        undo()


def build_multicontrol(pattern: str | Sequence[int], inner: Circuit) -> Circuit:
    """Apply ``inner`` iff the control register holds ``pattern`` (first symbol = MSB)."""
    pols = _bits(pattern)
    m = len(pols)
    if m < 1:
        raise ValueError("pattern needs at least one control")
    b = Builder()
    ctrl = b.add_register("ctrl", m, "data")
    for r in inner.registers:
        b.add_register(r.name, r.width, r.kind if r.kind != "pure" else "pure")
    wiring = {r.name: r.name for r in inner.registers}
    is_x = (len(inner.gates) == 1 and inner.gates[0].kind == "x" and inner.n_qubits == 1)
    if is_x:
        emit_mcx(b, ctrl, pols, b.qubits(inner.registers[0].name)[0])
    else:
        emit_controlled(b, inner, wiring, ctrl, pols)
    return b.finalize()


def single_gate_circuit(kind: str, params: Sequence[float] = (), name: str = "t") -> Circuit:
    b = Builder()
    (q,) = b.add_register(name, 1, "data")
    b.add(kind, (q,), params)
    return b.finalize()


# ---------------------------------------------------------------- adder

def emit_add(b: Builder, target: Sequence[int], addend: Sequence[int]) -> None:
    """target <- target + addend (mod 2^n), addend restored; one carry ancilla (n >= 2)."""
    n = len(target)
    assert len(addend) == n
    B = [target[n - 1 - k] for k in range(n)]   # bit k of target
    A = [addend[n - 1 - k] for k in range(n)]
    if n == 1:
        b.cx(A[0], B[0])
        return
    (c,) = b.borrow(1)

    def maj(x, y, z):
        b.cx(z, y); b.cx(z, x); toffoli(b, x, y, z)

    def uma(x, y, z):
        toffoli(b, x, y, z); b.cx(z, x); b.cx(x, y)

    maj(c, B[0], A[0])
    for k in range(1, n - 1):
        maj(A[k - 1], B[k], A[k])
    b.cx(A[n - 1], B[n - 1])
    b.cx(A[n - 2], B[n - 1])
    for k in range(n - 2, 0, -1):
        uma(A[k - 1], B[k], A[k])
    uma(c, B[0], A[0])
    b.release(1)


def build_modular_adder(n: int) -> Circuit:
    """|i>|j> -> |i+j mod 2^n>|j>; registers ``target`` and ``addend``."""
    if n < 1:
        raise ValueError("n >= 1")
    b = Builder()
    t = b.add_register("target", n)
    a = b.add_register("addend", n)
    emit_add(b, t, a)
    return b.finalize()


# ------------------------------------------------------- banded access

def _transpositions(slots: Sequence[int], n: int) -> list[tuple[int, int]]:
    """Transpositions whose sequential product sends value s to slots[s]."""
    N = 1 << n
    where = list(range(N))      # where[v]: current position of original value v
    at = list(range(N))         # at[pos]: original value now at pos
    out = []
    for s, r in enumerate(slots):
        cur = where[s]
        if cur == r:
            continue
        out.append((cur, r))
        w = at[r]
        at[cur], at[r] = w, s
        where[s], where[w] = r, cur
    return out


def emit_transposition(b: Builder, qs: Sequence[int], a: int, c: int) -> None:
    """Swap basis values a and c of the register ``qs`` (MSB first)."""
    n = len(qs)
    bit = lambda k: qs[n - 1 - k]
    d = a ^ c
    t = d.bit_length() - 1
    others = [u for u in range(n) if (d >> u) & 1 and u != t]
    for u in others:
        b.cx(bit(t), bit(u))
    ref = c if not (c >> t) & 1 else a   # representative with bit t clear, untouched by the cx's
    ctl = [bit(k) for k in range(n) if k != t]
    pols = [bool((ref >> k) & 1) for k in range(n) if k != t]
    emit_mcx(b, ctl, pols, bit(t))
    for u in reversed(others):
        b.cx(bit(t), bit(u))


def emit_banded_access(b: Builder, sparse: Sequence[int], base: Sequence[int],
                       pattern: SparsityPattern) -> None:
    n = len(sparse)
    if pattern.l > n:
        raise PatternOverflow(f"l={pattern.l} exceeds n={n}")
    for a, c in _transpositions(pattern.slots, n):
        emit_transposition(b, sparse, a, c)
    emit_add(b, sparse, base)


def build_banded_sparse_access(pattern: SparsityPattern, n: int) -> Circuit:
    """|0^{n-l}, s>|i> -> |r_s + i mod 2^n>|i>; registers ``sparse`` and ``base``."""
    if pattern.bands > 1 << pattern.l:
        raise PatternOverflow("more bands than slots")
    b = Builder()
    s = b.add_register("sparse", n)
    i = b.add_register("base", n)
    emit_banded_access(b, s, i, pattern)
    return b.finalize()


# --------------------------------------------- uniformly controlled rotations

def _gray(i: int) -> int:
    return i ^ (i >> 1)


def multiplexor_angles(thetas: np.ndarray) -> np.ndarray:
    k = int(round(math.log2(len(thetas))))
    K = 1 << k
    p = np.arange(K)[:, None]
    g = np.array([_gray(i) for i in range(K)])[None, :]
    pc = np.vectorize(popcount)(p & g)
    M = np.where(pc % 2 == 0, 1.0, -1.0)
    return M.T @ np.asarray(thetas, dtype=float) / K


def emit_uc_rotation(b: Builder, axis: str, target: int, controls: Sequence[int],
                     thetas: Sequence[float]) -> None:
    """Rotation by thetas[p] on ``target`` where p is the control value.

    ``controls[j]`` carries bit j of p.  Gray-code compilation: 2^k rotations and
    2^k cx; a pattern-independent angle collapses to one rotation.
    """
    th = np.asarray(thetas, dtype=float)
    k = len(controls)
    assert th.size == 1 << k
    rot = b.ry if axis == "y" else b.rz
    if k == 0 or np.all(np.abs(th - th[0]) < 1e-15):
        rot(target, float(th[0]))
        return
    al = multiplexor_angles(th)
    K = 1 << k
    for i in range(K):
        rot(target, float(al[i]))
        j = (i + 1 & -(i + 1)).bit_length() - 1 if i < K - 1 else k - 1
        b.cx(controls[j], target)


# ------------------------------------------------- generic state preparation

def emit_state_prep(b: Builder, qs: Sequence[int], amps: Sequence[complex]) -> None:
    """|0> -> sum_i amps[i] |i> exactly (including global phase); amps normalized."""
    a = np.asarray(amps, dtype=complex)
    w = len(qs)
    assert a.size == 1 << w
    mag = np.abs(a)
    for t in range(w):
        # qubit t is bit w-1-t; controls are the t more significant qubits
        blocks = mag.reshape(1 << t, 2, -1)
        n0 = np.linalg.norm(blocks[:, 0, :], axis=1)
        n1 = np.linalg.norm(blocks[:, 1, :], axis=1)
        th = 2 * np.arctan2(n1, n0)
        emit_uc_rotation(b, "y", qs[t], [qs[t - 1 - j] for j in range(t)], th)
    phi = np.where(mag > 0, np.angle(a), 0.0)
    for t in range(w - 1, -1, -1):
        pair = phi.reshape(-1, 2)
        emit_uc_rotation(b, "z", qs[t], [qs[t - 1 - j] for j in range(t)], pair[:, 1] - pair[:, 0])
        phi = pair.mean(axis=1)
    b.gphase(float(phi[0]))


def build_state_prep(amps: Sequence[complex], name: str = "data") -> Circuit:
    w = int(round(math.log2(len(amps))))
    b = Builder()
    qs = b.add_register(name, w)
    if w == 0:
        b.gphase(float(np.angle(amps[0])))
    else:
        emit_state_prep(b, qs, amps)
    return b.finalize()


# ---------------------------------------------------- binary-norm preparation

@dataclass
class AngleTable:
    n: int
    q: int
    theta: dict = field(default_factory=dict)   # (k, pattern) -> radians
    omega: dict = field(default_factory=dict)
    sign: float = 1.0                           # global sign restored by gphase(pi)
    route: str = "ratio"


def level_patterns(k: int, mcap: int) -> list[int]:
    """Lower-bit patterns of level k with binary norm <= min(k, mcap)."""
    lim = min(k, mcap)
    out = []
    for r in range(lim + 1):
        for combo in combinations(range(k), r):
            out.append(sum(1 << j for j in combo))
    return out


def _beta_array(beta) -> np.ndarray:
    return np.asarray(beta.beta if isinstance(beta, WalshCoefficients) else beta)


def reconstruct_amplitudes(table: AngleTable) -> np.ndarray:
    """Amplitudes produced by a theta table (classical replay of the rotation tree)."""
    n, mcap = table.n, min(table.q, table.n) - 1
    out = np.zeros(1 << n)
    for i in range(1 << n):
        amp = 1.0
        for k in range(n):
            p = i & ((1 << k) - 1)
            bit = (i >> k) & 1
            if popcount(p) > mcap:
                if bit:
                    amp = 0.0
                    break
                continue
            th = table.theta.get((k, p), 0.0)
            amp *= math.sin(th / 2) if bit else math.cos(th / 2)
        out[i] = amp
    return table.sign * out


def _ratio_angles(beta: np.ndarray, n: int, mcap: int) -> dict:
    theta: dict = {}
    for k in range(n - 1, -1, -1):
        for p in level_patterns(k, mcap):
            hi = p + (1 << k)

            def cprod(pat):
                if popcount(pat) > mcap:
                    return 1.0
                return math.prod(math.cos(theta[(j, pat)] / 2) for j in range(k + 1, n))
            num = beta[hi] * cprod(p)
            den = beta[p] * cprod(hi)
            if den == 0.0:
                if num == 0.0:
                    theta[(k, p)] = 0.0
                    continue
                raise NaNAngle(f"vanishing denominator at level {k}, pattern {p:b}")
            th = 2 * math.atan(num / den)
            if not math.isfinite(th):
                raise NaNAngle(f"non-finite angle at level {k}, pattern {p:b}")
            theta[(k, p)] = th
    return theta


def _tree_angles(beta: np.ndarray, n: int, q: int) -> dict:
    chi = min(q, n)
    mcap = chi - 1
    N = 1 << n
    norms = np.array([popcount(i) for i in range(N)])
    theta: dict = {}
    for k in range(n):
        mask = (1 << (k + 1)) - 1
        low = np.arange(N) & mask
        for p in level_patterns(k, mcap):
            hi = p + (1 << k)
            weights = []
            for key in (p, hi):
                leaf = k == n - 1 or popcount(key) >= chi
                if leaf:
                    weights.append(float(beta[key]))
                else:
                    sel = (low == key) & (norms <= chi)
                    weights.append(float(np.linalg.norm(beta[sel])))
            theta[(k, p)] = 2 * math.atan2(weights[1], weights[0])
    return theta


def omega_from_theta(theta: dict, n: int, mcap: int) -> dict:
    """Moebius inversion: theta_k^p = sum over P containing p (|P| <= min(k, mcap)) of omega_k^P."""
    omega: dict = {}
    for k in range(n):
        pats = sorted(level_patterns(k, mcap), key=popcount, reverse=True)
        for P in pats:
            acc = theta.get((k, P), 0.0)
            for P2 in pats:
                if P2 != P and P2 & P == P and (k, P2) in omega:
                    acc -= omega[(k, P2)]
            omega[(k, P)] = acc
    return omega


def solve_binary_norm_angles(beta, n: int, q: int, method: str = "ratio") -> AngleTable:
    """Rotation angles of the binary-norm preparation tree.

    ``method="ratio"`` follows the leaf-ratio recursion (needs beta_0 != 0 and
    nonvanishing leaves); ``method="tree"`` uses subtree norms and handles any
    real input.  Both are checked by replaying the tree.
    """
    b = np.asarray(_beta_array(beta), dtype=complex)
    if np.max(np.abs(b.imag)) > 1e-12:
        raise ValueError("binary-norm preparation needs real amplitudes")
    b = b.real.copy()
    original = b.copy()
    mcap = min(q, n) - 1
    sign = 1.0
    if method == "ratio":
        if b[0] == 0.0:
            raise ZeroLeadingAmplitude("beta_0 = 0")
        if b[0] < 0:
            b, sign = -b, -1.0
        theta = _ratio_angles(b, n, mcap)
    elif method == "tree":
        theta = _tree_angles(b, n, q)
    else:
        raise ValueError(method)
    table = AngleTable(n, q, theta, omega_from_theta(theta, n, mcap), sign, method)
    dev = np.max(np.abs(reconstruct_amplitudes(table) - original))
    if not dev <= 1e-10:
        raise NaNAngle(f"angle table reproduces beta only to {dev:.3e}")
    return table


def emit_neg_controlled_ry(b: Builder, target: int, zero_controls: Sequence[int], theta: float) -> None:
    """Ry(theta) on target iff every control is |0> (exact counts 16i-14 / 12i-10 for i >= 2)."""
    i = len(zero_controls)
    if i == 0:
        b.ry(target, theta)
    elif i == 1:
        c = zero_controls[0]
        b.add("ry", (target,), (theta / 2,))
        b.cx(c, target)
        b.add("ry", (target,), (theta / 2,))
        b.cx(c, target)
    else:
        ctrl, undo = emit_and(b, zero_controls, [False] * i)
        controlled_gate(b, Gate("ry", (target,), (theta,)), ctrl)
        undo()


OMEGA_SKIP = 1e-14


def emit_binary_norm_prep(b: Builder, qs: Sequence[int], table: AngleTable) -> None:
    n = table.n
    bit = lambda k: qs[n - 1 - k]
    for k in range(n):
        for P in sorted(p for (kk, p) in table.omega if kk == k):
            w = table.omega[(k, P)]
            if abs(w) <= OMEGA_SKIP:
                continue
            zeros = [bit(j) for j in range(k) if not (P >> j) & 1]
            emit_neg_controlled_ry(b, bit(k), zeros, w)
    if table.sign < 0:
        b.add("gphase", (), (math.pi,))


def build_binary_norm_prep(angles: AngleTable, n: int, q: int) -> Circuit:
    b = Builder()
    qs = b.add_register("data", n)
    emit_binary_norm_prep(b, qs, angles)
    return b.finalize()


def binary_norm_bound(n: int, q: int) -> tuple[int, int]:
    """Closed-form counts of the construction: sum over levels k and patterns of A(i), B(i)."""
    A = lambda i: 1 if i == 0 else (2 if i == 1 else 16 * i - 14)
    Bc = lambda i: 0 if i == 0 else (2 if i == 1 else 12 * i - 10)
    mcap = min(q, n) - 1
    one = cx = 0
    for k in range(n):
        for r in range(min(k, mcap) + 1):
            i = k - r
            cnt = math.comb(k, r)
            one += cnt * A(i)
            cx += cnt * Bc(i)
    return one, cx


# ------------------------------------------------------- momentum oracle

@dataclass
class MomentumOracle:
    circuit: Circuit
    scale: float          # sqrt(N_{p^m})
    thetas: np.ndarray


def momentum_thetas(pattern: SparsityPattern, values: Sequence[complex] | None, m: int) -> tuple[np.ndarray, float]:
    vals = np.asarray(pattern.slot_values if values is None else values, dtype=complex)
    if vals.size < 1 << pattern.l:
        vals = np.concatenate([vals, np.zeros((1 << pattern.l) - vals.size)])
    Nsq = float(np.max(np.abs(vals) ** 2))
    rot = (1j ** m) * vals / math.sqrt(Nsq)
    if np.max(np.abs(rot.imag)) > CLIP_TOL:
        raise ComplexResidual(f"i^m * value has imaginary part {np.max(np.abs(rot.imag)):.3e}")
    r = rot.real
    if np.any(np.abs(r) > 1 + CLIP_TOL):
        raise ComplexResidual("amplitude outside [-1, 1]")
    return 2 * np.arccos(np.clip(r, -1.0, 1.0)), math.sqrt(Nsq)


def emit_momentum_oracle(b: Builder, flag: int, s: Sequence[int], thetas: np.ndarray, m: int,
                         with_phase: bool = True) -> None:
    l = len(s)
    emit_uc_rotation(b, "y", flag, [s[l - 1 - j] for j in range(l)], thetas)
    if with_phase:
        b.gphase(math.remainder(-math.pi * m / 2, 2 * math.pi))


def build_momentum_oracle(pattern: SparsityPattern, values: Sequence[complex] | None, m: int,
                          with_phase: bool = True) -> MomentumOracle:
    """<0,s|O|0,s> = value_s / sqrt(N) on registers ``flag`` (1) and ``s`` (l)."""
    th, scale = momentum_thetas(pattern, values, m)
    b = Builder()
    (f,) = b.add_register("flag", 1, "flag")
    s = b.add_register("s", pattern.l, "data")
    emit_momentum_oracle(b, f, s, th, m, with_phase)
    return MomentumOracle(b.finalize(), scale, th)
