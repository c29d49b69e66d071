"""Gate-level circuit IR: registers, gates, builders and circuit transformers.

Qubit order: registers are laid out in declaration order; inside a register the
first qubit is the most significant bit.  Flat qubit q of an N-qubit circuit is
bit (N-1-q) of a basis-state index.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import NameCollision, WidthMismatch

KINDS = ("data", "flag", "pure")
ONE_QUBIT = {"h", "x", "y", "z", "s", "sdg", "rx", "ry", "rz", "u3"}
ARITY = {"h": 0, "x": 0, "y": 0, "z": 0, "s": 0, "sdg": 0, "rx": 1, "ry": 1, "rz": 1,
         "u3": 3, "cx": 0, "gphase": 1}
ANGLE_EPS = 1e-15
POOL_BASE = 1 << 40


@dataclass(frozen=True)
class Register:
    name: str
    width: int
    kind: str
    start: int = 0

    @property
    def qubits(self) -> list[int]:
        return list(range(self.start, self.start + self.width))


class Gate(NamedTuple):
    kind: str
    qubits: tuple
    params: tuple = ()


# ----------------------------------------------------------------- matrices

def gate_matrix(kind: str, params: Sequence[float] = ()) -> np.ndarray:
    """2x2 matrix of a one-qubit gate (1x1 phase for gphase)."""
    if kind == "h":
        return np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
    if kind == "x":
        return np.array([[0, 1], [1, 0]], dtype=complex)
    if kind == "y":
        return np.array([[0, -1j], [1j, 0]], dtype=complex)
    if kind == "z":
        return np.array([[1, 0], [0, -1]], dtype=complex)
    if kind == "s":
        return np.array([[1, 0], [0, 1j]], dtype=complex)
    if kind == "sdg":
        return np.array([[1, 0], [0, -1j]], dtype=complex)
    if kind == "rx":
        c, s = math.cos(params[0] / 2), math.sin(params[0] / 2)
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if kind == "ry":
        c, s = math.cos(params[0] / 2), math.sin(params[0] / 2)
        return np.array([[c, -s], [s, c]], dtype=complex)
    if kind == "rz":
        e = np.exp(0.5j * params[0])
        return np.array([[1 / e, 0], [0, e]], dtype=complex)
    if kind == "u3":
        t, p, l = params
        c, s = math.cos(t / 2), math.sin(t / 2)
        return np.array([[c, -np.exp(1j * l) * s], [np.exp(1j * p) * s, np.exp(1j * (p + l)) * c]],
                        dtype=complex)
    if kind == "gphase":
        return np.array([[np.exp(1j * params[0])]], dtype=complex)
    raise ValueError(f"no 2x2 matrix for gate kind {kind!r}")


# ------------------------------------------------------------------ circuit

class Circuit:
    """Immutable ordered gate list over named registers."""

    __slots__ = ("registers", "gates", "_counts", "_index")

    def __init__(self, registers: Sequence[Register], gates: Sequence[Gate] = ()):
        regs, start, seen = [], 0, set()
        for r in registers:
            if r.kind not in KINDS:
                raise ValueError(f"unknown register kind {r.kind!r}")
            if r.name in seen:
                raise NameCollision(f"duplicate register name {r.name!r}")
            seen.add(r.name)
            regs.append(Register(r.name, r.width, r.kind, start))
            start += r.width
        self.registers: tuple[Register, ...] = tuple(regs)
        self.gates: tuple[Gate, ...] = tuple(gates)
        self._counts = None
        self._index = {r.name: r for r in self.registers}
        N = start
        for g in self.gates:
            for q in g.qubits:
                if not 0 <= q < N:
                    raise ValueError(f"gate {g} targets qubit {q} outside 0..{N - 1}")

    @property
    def n_qubits(self) -> int:
        return sum(r.width for r in self.registers)

    def reg(self, name: str) -> Register:
        return self._index[name]

    def has(self, name: str) -> bool:
        return name in self._index

    def qubits(self, name: str) -> list[int]:
        return self._index[name].qubits

    def registers_of(self, kind: str) -> list[Register]:
        return [r for r in self.registers if r.kind == kind]

    @property
    def counts(self) -> tuple[int, int]:
        if self._counts is None:
            one = cx = 0
            for g in self.gates:
                if g.kind == "cx":
                    cx += 1
                elif g.kind != "gphase":
                    one += 1
            self._counts = (one, cx)
        return self._counts

    def __len__(self):
        return len(self.gates)

    def __eq__(self, other):
        return (isinstance(other, Circuit) and self.registers == other.registers
                and self.gates == other.gates)

    def __repr__(self):
        regs = ", ".join(f"{r.name}[{r.width}]:{r.kind}" for r in self.registers)
        return f"Circuit({regs}; {len(self.gates)} gates)"

    def renamed(self, mapping: Mapping[str, str]) -> "Circuit":
        regs = [Register(mapping.get(r.name, r.name), r.width, r.kind) for r in self.registers]
        return Circuit(regs, self.gates)

    def with_kinds(self, kinds: Mapping[str, str]) -> "Circuit":
        regs = [Register(r.name, r.width, kinds.get(r.name, r.kind)) for r in self.registers]
        return Circuit(regs, self.gates)


def count_resources(c: Circuit) -> tuple[int, int, int]:
    one, cx = c.counts
    pure = sum(r.width for r in c.registers if r.kind == "pure")
    return one, cx, pure


# ------------------------------------------------------------------ builder

class Builder:
    """Mutable gate accumulator with an on-demand pure-ancilla pool.

    Pool qubits carry virtual ids until ``finalize`` appends the pool register.
    Borrowing follows a stack discipline so nested constructions reuse qubits.
    """

    def __init__(self):
        self.registers: list[Register] = []
        self.gates: list[Gate] = []
        self._width = 0
        self._pool_used = 0
        self._pool_max = 0

    # registers
    def add_register(self, name: str, width: int, kind: str = "data") -> list[int]:
        if any(r.name == name for r in self.registers):
            raise NameCollision(f"register {name!r} already exists")
        self.registers.append(Register(name, width, kind, self._width))
        self._width += width
        return list(range(self._width - width, self._width))

    def qubits(self, name: str) -> list[int]:
        for r in self.registers:
            if r.name == name:
                return r.qubits
        raise KeyError(name)

    # pool
    def borrow(self, k: int) -> list[int]:
        ids = [POOL_BASE + self._pool_used + i for i in range(k)]
        self._pool_used += k
        self._pool_max = max(self._pool_max, self._pool_used)
        return ids

    def release(self, k: int) -> None:
        self._pool_used -= k
        assert self._pool_used >= 0

    # gates
    def add(self, kind: str, qubits: Sequence[int], params: Sequence[float] = ()) -> None:
        self.gates.append(Gate(kind, tuple(qubits), tuple(float(p) for p in params)))

    def h(self, q): self.add("h", (q,))
    def x(self, q): self.add("x", (q,))
    def y(self, q): self.add("y", (q,))
    def z(self, q): self.add("z", (q,))
    def s(self, q): self.add("s", (q,))
    def sdg(self, q): self.add("sdg", (q,))
    def cx(self, c, t): self.add("cx", (c, t))

    def ry(self, q, th):
        if abs(th) > ANGLE_EPS:
            self.add("ry", (q,), (th,))

    def rz(self, q, th):
        if abs(th) > ANGLE_EPS:
            self.add("rz", (q,), (th,))

    def rx(self, q, th):
        if abs(th) > ANGLE_EPS:
            self.add("rx", (q,), (th,))

    def u3(self, q, t, p, l):
        self.add("u3", (q,), (t, p, l))

    def phase(self, q, lam):
        """diag(1, e^{i lam}) as a single u3."""
        if abs(lam) > ANGLE_EPS:
            self.add("u3", (q,), (0.0, 0.0, lam))

    def gphase(self, th):
        if abs(th) > ANGLE_EPS:
            self.add("gphase", (), (th,))

    def extend(self, gates: Iterable[Gate]) -> None:
        self.gates.extend(gates)

    def embed(self, sub: Circuit, wiring: Mapping[str, object]) -> None:
        """Append ``sub`` with its registers wired onto this builder's qubits.

        Wiring values are builder register names or explicit qubit lists.  Unwired
        pure registers of ``sub`` are borrowed from the pool for the duration.
        """
        qmap = np.empty(sub.n_qubits, dtype=object)
        borrowed = 0
        for r in sub.registers:
            if r.name in wiring:
                tgt = wiring[r.name]
                qs = self.qubits(tgt) if isinstance(tgt, str) else list(tgt)
                if len(qs) != r.width:
                    raise WidthMismatch(f"register {r.name!r} has width {r.width}, wired to {len(qs)} qubits")
            elif r.kind == "pure":
                qs = self.borrow(r.width)
                borrowed += r.width
            else:
                raise WidthMismatch(f"register {r.name!r} of kind {r.kind} is not wired")
            qmap[r.start:r.start + r.width] = qs
        m = qmap.tolist()
        self.gates.extend(Gate(g.kind, tuple(m[q] for q in g.qubits), g.params) for g in sub.gates)
        if borrowed:
            self.release(borrowed)

    def finalize(self, pool_name: str = "anc") -> Circuit:
        regs = list(self.registers)
        gates = self.gates
        if self._pool_max:
            regs.append(Register(pool_name, self._pool_max, "pure", self._width))
            base, width = POOL_BASE, self._width

            def fix(q):
                return q - base + width if q >= base else q
            gates = [Gate(g.kind, tuple(fix(q) for q in g.qubits), g.params)
                     if any(q >= base for q in g.qubits) else g for g in gates]
        return Circuit(regs, gates)


# ------------------------------------------------------- composition helpers

def compose(a: Circuit, b: Circuit, wiring: Mapping[str, object] | None = None) -> Circuit:
    """Gates of ``a`` followed by rewired gates of ``b``.

    Registers of ``b`` absent from ``wiring`` become fresh registers of the result
    (NameCollision if the name is taken).  A missing wiring means identity by name.
    """
    if wiring is None:
        wiring = {r.name: r.name for r in b.registers if a.has(r.name)}
    bld = Builder()
    for r in a.registers:
        bld.add_register(r.name, r.width, r.kind)
    bld.gates = list(a.gates)
    for r in b.registers:
        if r.name not in wiring:
            if a.has(r.name):
                raise NameCollision(f"fresh register {r.name!r} collides with an existing one")
            bld.add_register(r.name, r.width, r.kind)
    full = dict(wiring)
    for r in b.registers:
        full.setdefault(r.name, r.name)
    for name, tgt in full.items():
        w = b.reg(name).width
        got = a.reg(tgt).width if isinstance(tgt, str) and a.has(tgt) else (
            len(tgt) if not isinstance(tgt, str) else w)
        if got != w:
            raise WidthMismatch(f"register {name!r} (width {w}) wired to width {got}")
    bld.embed(b, full)
    return bld.finalize()


def _inverse_gate(g: Gate) -> list[Gate]:
    k = g.kind
    if k in ("h", "x", "y", "z", "cx"):
        return [g]
    if k == "s":
        return [Gate("sdg", g.qubits)]
    if k == "sdg":
        return [Gate("s", g.qubits)]
    if k in ("rx", "ry", "rz", "gphase"):
        return [Gate(k, g.qubits, (-g.params[0],))]
    if k == "u3":
        t, p, l = g.params
        return [Gate("u3", g.qubits, (-t, -l, -p))]
    raise ValueError(k)


def inverse_of(c: Circuit) -> Circuit:
    out = []
    for g in reversed(c.gates):
        out.extend(_inverse_gate(g))
    return Circuit(c.registers, out)


def _transpose_gate(g: Gate) -> list[Gate]:
    k = g.kind
    if k in ("h", "x", "z", "s", "sdg", "rx", "rz", "cx", "gphase"):
        return [g]
    if k == "y":
        return [g, Gate("gphase", (), (math.pi,))]
    if k == "ry":
        return [Gate("ry", g.qubits, (-g.params[0],))]
    if k == "u3":
        t, p, l = g.params
        return [Gate("u3", g.qubits, (-t, l, p))]
    raise ValueError(k)


def transpose_of(c: Circuit) -> Circuit:
    """Circuit whose unitary is the matrix transpose of ``c``'s unitary."""
    out = []
    for g in reversed(c.gates):
        out.extend(_transpose_gate(g))
    return Circuit(c.registers, out)


# ----------------------------------------------------- controlled gates

T_ANGLE = math.pi / 4


def toffoli(b: Builder, a: int, c: int, t: int, pa: bool = True, pb: bool = True) -> None:
    """Toffoli with control polarities (8 one-qubit gates, 6 cx, exact phase).

    A negative control flips the sign of every T-type phase on a parity that
    contains it; the phase-polynomial form makes X-conjugation unnecessary.
    """
    sa = 1.0 if pa else -1.0
    sb = 1.0 if pb else -1.0
    # phase signs of the seven parity terms: t, t^b, t^a^b, t^a, b, a, a^b
    q = T_ANGLE
    b.h(t)
    b.cx(c, t)
    b.phase(t, -q * sb)              # parity t^b
    b.cx(a, t)
    b.phase(t, q * sa * sb)          # parity t^a^b
    b.cx(c, t)
    b.phase(t, -q * sa)              # parity t^a
    b.cx(a, t)
    b.phase(c, q * sb)               # parity b
    b.u3(t, math.pi / 2, 0.0, math.pi + q)   # T on t merged with the closing H
    b.cx(a, c)
    b.phase(a, q * sa)               # parity a
    b.phase(c, -q * sa * sb)         # parity a^b
    b.cx(a, c)


def _zyz(U: np.ndarray) -> tuple[float, float, float, float]:
    """U = e^{i a} Rz(b) Ry(g) Rz(d)."""
    det = U[0, 0] * U[1, 1] - U[0, 1] * U[1, 0]
    a = float(np.angle(det)) / 2
    V = U * np.exp(-1j * a)
    g = 2 * math.atan2(abs(V[1, 0]), abs(V[0, 0]))
    if abs(V[1, 0]) < 1e-13:
        s_sum, s_dif = 2 * float(np.angle(V[1, 1])), 0.0
    elif abs(V[0, 0]) < 1e-13:
        s_sum, s_dif = 0.0, 2 * float(np.angle(V[1, 0]))
    else:
        s_sum, s_dif = 2 * float(np.angle(V[1, 1])), 2 * float(np.angle(V[1, 0]))
    return a, (s_sum + s_dif) / 2, g, (s_sum - s_dif) / 2


@lru_cache(maxsize=4096)
def _abc_plan(kind: str, params: tuple) -> tuple:
    U = gate_matrix(kind, params)
    a, be, ga, de = _zyz(U)
    plan = []  # (where, kind, params): where in {"t", "c", "g"}, "cx" marks a cx
    plan.append(("t", "rz", ((de - be) / 2,)))
    plan.append(("cx",))
    lam = -(de + be) / 2
    if abs(ga) < 1e-14:
        plan.append(("t", "rz", (lam,)))
    else:
        plan.append(("t", "u3", (-ga / 2, 0.0, lam)))
        plan.append(("g", "gphase", (-lam / 2,)))
    plan.append(("cx",))
    if abs(ga) < 1e-14:
        plan.append(("t", "rz", (be,)))
    else:
        plan.append(("t", "u3", (ga / 2, be, 0.0)))
        plan.append(("g", "gphase", (-be / 2,)))
    plan.append(("c", "u3", (0.0, 0.0, a)))
    return tuple(plan)


def _norm_angle(th: float) -> float:
    return math.remainder(th, 4 * math.pi)


def controlled_gate(b: Builder, g: Gate, ctrl: int) -> None:
    """Emit ``g`` controlled on ``ctrl`` being |1>."""
    k = g.kind
    if k == "gphase":
        b.phase(ctrl, g.params[0])
        return
    if k == "cx":
        toffoli(b, ctrl, g.qubits[0], g.qubits[1])
        return
    t = g.qubits[0]
    if k == "x":
        b.cx(ctrl, t)
    elif k == "y":
        b.sdg(t); b.cx(ctrl, t); b.s(t)
    elif k == "z":
        b.h(t); b.cx(ctrl, t); b.h(t)
    elif k in ("ry", "rz"):
        th = g.params[0]
        b.add(k, (t,), (th / 2,))
        b.cx(ctrl, t)
        b.add(k, (t,), (-th / 2,))
        b.cx(ctrl, t)
    elif k == "u3" and abs(g.params[0]) < ANGLE_EPS:
        lam = g.params[1] + g.params[2]
        b.phase(ctrl, lam / 2)
        b.phase(t, lam / 2)
        b.cx(ctrl, t)
        b.phase(t, -lam / 2)
        b.cx(ctrl, t)
    else:
        for step in _abc_plan(k, g.params):
            if step[0] == "cx":
                b.cx(ctrl, t)
                continue
            where, kind, params = step
            if kind == "gphase":
                b.gphase(params[0])
            elif kind == "rz":
                b.rz(ctrl if where == "c" else t, params[0])
            elif where == "c":
                b.phase(ctrl, params[2])
            else:
                b.u3(t, *params)


def controlled_of(c: Circuit, control_name: str = "ctrl", on_zero: bool = False,
                  control_kind: str = "data") -> Circuit:
    """``c`` controlled on a new one-qubit register appended after ``c``'s registers."""
    if c.has(control_name):
        raise NameCollision(f"register {control_name!r} already present")
    b = Builder()
    for r in c.registers:
        b.add_register(r.name, r.width, r.kind)
    (ctrl,) = b.add_register(control_name, 1, control_kind)
    if on_zero:
        b.x(ctrl)
    for g in c.gates:
        controlled_gate(b, g, ctrl)
    if on_zero:
        b.x(ctrl)
    return b.finalize()


# --------------------------------------------------------- text format

def _fmt(th: float) -> str:
    return format(float(th), ".17g")


def export_gates(c: Circuit) -> str:
    lines = [f"# reg {r.name} {r.start} {r.width} {r.kind}" for r in c.registers]
    for g in c.gates:
        if g.kind == "gphase":
            lines.append(f"gphase {_fmt(g.params[0])}")
        else:
            parts = [g.kind, *map(str, g.qubits), *map(_fmt, g.params)]
            lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def parse_gates(text: str) -> Circuit:
    regs, gates = [], []
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        tok = line.split()
        if tok[0] == "#":
            if len(tok) == 6 and tok[1] == "reg":
                regs.append((int(tok[3]), Register(tok[2], int(tok[4]), tok[5])))
            continue
        kind = tok[0]
        if kind not in ARITY:
            raise ValueError(f"line {ln}: unknown gate {kind!r}")
        nq = 0 if kind == "gphase" else (2 if kind == "cx" else 1)
        if len(tok) != 1 + nq + ARITY[kind]:
            raise ValueError(f"line {ln}: wrong operand count for {kind}")
        qs = tuple(int(t) for t in tok[1:1 + nq])
        ps = tuple(float(t) for t in tok[1 + nq:])
        gates.append(Gate(kind, qs, ps))
    regs.sort(key=lambda x: x[0])
    return Circuit([r for _, r in regs], gates)
