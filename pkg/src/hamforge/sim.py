"""State-vector execution and block extraction.

Two independent engines:

* ``apply_circuit`` - dense numpy tensor contraction over the full register
  (the simple reference route);
* the sparse engine - a numba kernel over (sorted index, amplitude) pairs that
  pushes every basis column through the circuit at once by parking the column
  label in extra high bits.  Block-encoding circuits touch few basis states, so
  this is what makes desk-scale verification of large circuits feasible.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numba as nb
import numpy as np

from .circuit import Circuit, gate_matrix
from .errors import AncillaLeak, DimensionMismatch

LEAK_TOL = 1e-10
PRUNE_TOL = 1e-15

OP_PHASE, OP_DIAG, OP_ANTI, OP_GEN, OP_CX = 0, 1, 2, 3, 4


@dataclass
class StateVector:
    amplitudes: np.ndarray

    @property
    def n_qubits(self) -> int:
        return int(round(np.log2(self.amplitudes.size)))

    @staticmethod
    def basis(n: int, index: int) -> "StateVector":
        v = np.zeros(1 << n, dtype=complex)
        v[index] = 1.0
        return StateVector(v)


# ------------------------------------------------------------ dense route

def apply_circuit(c: Circuit, psi: StateVector | np.ndarray) -> StateVector:
    amps = psi.amplitudes if isinstance(psi, StateVector) else np.asarray(psi)
    N = c.n_qubits
    if amps.size != 1 << N:
        raise DimensionMismatch(f"state has {amps.size} amplitudes, circuit needs 2^{N}")
    st = amps.astype(complex).reshape((2,) * N) if N else amps.astype(complex).copy()
    cxm = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]],
                   dtype=complex).reshape(2, 2, 2, 2)
    for g in c.gates:
        if g.kind == "gphase":
            st = st * np.exp(1j * g.params[0])
        elif g.kind == "cx":
            a, b = g.qubits
            st = np.tensordot(cxm, st, axes=([2, 3], [a, b]))
            st = np.moveaxis(st, [0, 1], [a, b])
        else:
            (q,) = g.qubits
            st = np.tensordot(gate_matrix(g.kind, g.params), st, axes=([1], [q]))
            st = np.moveaxis(st, 0, q)
    return StateVector(st.reshape(-1))


def circuit_unitary(c: Circuit) -> np.ndarray:
    """Full unitary by the dense route (small circuits only)."""
    N = c.n_qubits
    cols = [apply_circuit(c, StateVector.basis(N, j)).amplitudes for j in range(1 << N)]
    return np.array(cols).T


# ----------------------------------------------------------- sparse route

@nb.njit(cache=True, nogil=True)
def _merge(ka, va, kb, vb):
    n = ka.size + kb.size
    ko = np.empty(n, np.int64)
    vo = np.empty(n, np.complex128)
    i = j = o = 0
    while i < ka.size and j < kb.size:
        if ka[i] < kb[j]:
            ko[o] = ka[i]; vo[o] = va[i]; i += 1
        else:
            ko[o] = kb[j]; vo[o] = vb[j]; j += 1
        o += 1
    while i < ka.size:
        ko[o] = ka[i]; vo[o] = va[i]; i += 1; o += 1
    while j < kb.size:
        ko[o] = kb[j]; vo[o] = vb[j]; j += 1; o += 1
    return ko, vo


@nb.njit(cache=True, nogil=True)
def _split(keys, amps, bit):
    n1 = 0
    for i in range(keys.size):
        if keys[i] & bit:
            n1 += 1
    n0 = keys.size - n1
    k0 = np.empty(n0, np.int64); v0 = np.empty(n0, np.complex128)
    k1 = np.empty(n1, np.int64); v1 = np.empty(n1, np.complex128)
    a = b = 0
    for i in range(keys.size):
        if keys[i] & bit:
            k1[b] = keys[i]; v1[b] = amps[i]; b += 1
        else:
            k0[a] = keys[i]; v0[a] = amps[i]; a += 1
    return k0, v0, k1, v1


@nb.njit(cache=True, nogil=True)
def _run(keys, amps, ops, qa, qb, mats, tol):
    for g in range(ops.size):
        op = ops[g]
        if op == 0:
            amps = amps * mats[g, 0]
        elif op == 1:
            bit = np.int64(1) << qa[g]
            d0 = mats[g, 0]; d1 = mats[g, 3]
            for i in range(keys.size):
                if keys[i] & bit:
                    amps[i] *= d1
                else:
                    amps[i] *= d0
        elif op == 2:
            bit = np.int64(1) << qa[g]
            k0, v0, k1, v1 = _split(keys, amps, bit)
            # |0> -> m10 |1>, |1> -> m01 |0>
            for i in range(k0.size):
                k0[i] |= bit; v0[i] *= mats[g, 2]
            for i in range(k1.size):
                k1[i] ^= bit; v1[i] *= mats[g, 1]
            keys, amps = _merge(k1, v1, k0, v0)
        elif op == 3:
            bit = np.int64(1) << qa[g]
            k0, v0, k1, v1 = _split(keys, amps, bit)
            m00 = mats[g, 0]; m01 = mats[g, 1]; m10 = mats[g, 2]; m11 = mats[g, 3]
            n = k0.size + k1.size
            ok0 = np.empty(n, np.int64); ov0 = np.empty(n, np.complex128)
            ok1 = np.empty(n, np.int64); ov1 = np.empty(n, np.complex128)
            i = j = c0 = c1 = 0
            while i < k0.size or j < k1.size:
                if j >= k1.size or (i < k0.size and k0[i] < (k1[j] ^ bit)):
                    key = k0[i]; a0 = v0[i]; a1 = 0j; i += 1
                elif i >= k0.size or (k1[j] ^ bit) < k0[i]:
                    key = k1[j] ^ bit; a0 = 0j; a1 = v1[j]; j += 1
                else:
                    key = k0[i]; a0 = v0[i]; a1 = v1[j]; i += 1; j += 1
                n0 = m00 * a0 + m01 * a1
                n1 = m10 * a0 + m11 * a1
                if abs(n0) > tol:
                    ok0[c0] = key; ov0[c0] = n0; c0 += 1
                if abs(n1) > tol:
                    ok1[c1] = key | bit; ov1[c1] = n1; c1 += 1
            keys, amps = _merge(ok0[:c0], ov0[:c0], ok1[:c1], ov1[:c1])
        else:
            cbit = np.int64(1) << qa[g]
            tbit = np.int64(1) << qb[g]
            nu = 0
            for i in range(keys.size):
                if not keys[i] & cbit:
                    nu += 1
            ku = np.empty(nu, np.int64); vu = np.empty(nu, np.complex128)
            na = keys.size - nu
            kc = np.empty(na, np.int64); vc = np.empty(na, np.complex128)
            a = b = 0
            for i in range(keys.size):
                if keys[i] & cbit:
                    kc[b] = keys[i]; vc[b] = amps[i]; b += 1
                else:
                    ku[a] = keys[i]; vu[a] = amps[i]; a += 1
            t0, w0, t1, w1 = _split(kc, vc, tbit)
            for i in range(t0.size):
                t0[i] |= tbit
            for i in range(t1.size):
                t1[i] ^= tbit
            km, vm = _merge(t1, w1, t0, w0)
            keys, amps = _merge(ku, vu, km, vm)
    return keys, amps


@nb.njit(cache=True, nogil=True)
def _run_dense(psi, ops, qa, qb, mats):
    """In-place full-vector execution of a compiled circuit."""
    n = psi.size
    for g in range(ops.size):
        op = ops[g]
        if op == 0:
            ph = mats[g, 0]
            for i in range(n):
                psi[i] *= ph
        elif op == 4:
            cbit = np.int64(1) << qa[g]
            tbit = np.int64(1) << qb[g]
            for i in range(n):
                if (i & cbit) and not (i & tbit):
                    j = i | tbit
                    t = psi[i]; psi[i] = psi[j]; psi[j] = t
        else:
            bit = np.int64(1) << qa[g]
            m00 = mats[g, 0]; m01 = mats[g, 1]; m10 = mats[g, 2]; m11 = mats[g, 3]
            for i in range(n):
                if not i & bit:
                    j = i | bit
                    a0 = psi[i]; a1 = psi[j]
                    psi[i] = m00 * a0 + m01 * a1
                    psi[j] = m10 * a0 + m11 * a1
    return psi


@dataclass
class CompiledCircuit:
    n_qubits: int
    ops: np.ndarray
    qa: np.ndarray
    qb: np.ndarray
    mats: np.ndarray


_COMPILED: dict[int, tuple[Circuit, CompiledCircuit]] = {}


def compile_circuit(c: Circuit) -> CompiledCircuit:
    hit = _COMPILED.get(id(c))
    if hit is not None and hit[0] is c:
        return hit[1]
    N = c.n_qubits
    G = len(c.gates)
    ops = np.empty(G, np.int8)
    qa = np.zeros(G, np.int64)
    qb = np.zeros(G, np.int64)
    mats = np.zeros((G, 4), np.complex128)
    cache: dict = {}
    for i, g in enumerate(c.gates):
        if g.kind == "gphase":
            ops[i] = OP_PHASE
            mats[i, 0] = np.exp(1j * g.params[0])
            continue
        if g.kind == "cx":
            ops[i] = OP_CX
            qa[i] = N - 1 - g.qubits[0]
            qb[i] = N - 1 - g.qubits[1]
            continue
        key = (g.kind, g.params)
        ent = cache.get(key)
        if ent is None:
            m = gate_matrix(g.kind, g.params)
            if m[0, 1] == 0 and m[1, 0] == 0:
                op = OP_DIAG
            elif m[0, 0] == 0 and m[1, 1] == 0:
                op = OP_ANTI
            else:
                op = OP_GEN
            ent = cache[key] = (op, m.reshape(-1))
        ops[i] = ent[0]
        mats[i] = ent[1]
        qa[i] = N - 1 - g.qubits[0]
    cc = CompiledCircuit(N, ops, qa, qb, mats)
    if len(_COMPILED) > 64:
        _COMPILED.clear()
    _COMPILED[id(c)] = (c, cc)
    return cc


def thread_count() -> int:
    env = os.environ.get("HAMFORGE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return max(1, min(8, os.cpu_count() or 1))


def run_columns(c: Circuit, inputs: Sequence[int], tol: float = PRUNE_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Evolve every basis input ``inputs[j]`` (amplitude 1) through ``c``.

    Returns sorted keys and amplitudes; key >> N is the column label j and
    key & (2^N - 1) the basis index of the output component.
    """
    cc = compile_circuit(c)
    N = cc.n_qubits
    inputs = np.asarray(inputs, dtype=np.int64)
    ncol = inputs.size
    if N + max(1, int(np.ceil(np.log2(max(ncol, 2))))) > 62:
        raise DimensionMismatch("too many qubits for the sparse engine")
    keys = (np.arange(ncol, dtype=np.int64) << N) | inputs
    amps = np.ones(ncol, dtype=np.complex128)
    workers = min(thread_count(), ncol)
    if workers <= 1:
        return _run(keys, amps, cc.ops, cc.qa, cc.qb, cc.mats, tol)
    chunks = np.array_split(np.arange(ncol), workers)
    with ThreadPoolExecutor(workers) as pool:
        futs = [pool.submit(_run, keys[ch].copy(), amps[ch].copy(), cc.ops, cc.qa, cc.qb, cc.mats, tol)
                for ch in chunks if ch.size]
        parts = [f.result() for f in futs]
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def apply_circuit_sparse(c: Circuit, psi: StateVector | np.ndarray) -> StateVector:
    """Same contract as ``apply_circuit`` via the sparse engine (linear superposition)."""
    amps = psi.amplitudes if isinstance(psi, StateVector) else np.asarray(psi)
    N = c.n_qubits
    if amps.size != 1 << N:
        raise DimensionMismatch(f"state has {amps.size} amplitudes, circuit needs 2^{N}")
    nz = np.nonzero(amps)[0]
    keys, vals = run_columns(c, nz, 0.0)
    out = np.zeros(1 << N, dtype=complex)
    np.add.at(out, keys & ((1 << N) - 1), vals * amps[nz][keys >> N])
    return StateVector(out)


# ------------------------------------------------------ block extraction

@dataclass
class BlockEncodingDescriptor:
    scale: float
    flag_qubits: int
    error: float
    data_register: str
    flag_registers: list[str]
    pure_ancilla_registers: list[str]
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("block-encoding scale must be positive")
        if self.error < 0:
            raise ValueError("error must be nonnegative")

    def to_json(self) -> dict:
        out = {"scale": self.scale, "flag_qubits": self.flag_qubits, "error": self.error,
               "data_register": self.data_register, "flag_registers": list(self.flag_registers),
               "pure_ancilla_registers": list(self.pure_ancilla_registers)}
        out.update({k: v for k, v in self.extra.items() if isinstance(v, (int, float, str, list, dict))})
        return out


def describe(c: Circuit, scale: float, data: str, error: float = 0.0, **extra) -> BlockEncodingDescriptor:
    flags = [r.name for r in c.registers if r.kind == "flag"]
    pures = [r.name for r in c.registers if r.kind == "pure"]
    return BlockEncodingDescriptor(scale, sum(c.reg(f).width for f in flags), error, data,
                                   flags, pures, dict(extra))


def _mask(c: Circuit, names: Sequence[str]) -> int:
    N = c.n_qubits
    m = 0
    for nm in names:
        for q in c.qubits(nm):
            m |= 1 << (N - 1 - q)
    return m


def _field(c: Circuit, name: str):
    r = c.reg(name)
    return c.n_qubits - r.start - r.width, (1 << r.width) - 1


@dataclass
class BlockResult:
    block: np.ndarray
    leak: float


def extract_transition(c: Circuit, in_reg: str | Sequence[str], out_reg: str | Sequence[str],
                       zero_out: Sequence[str] | None = None, check: bool = True,
                       leak_tol: float = LEAK_TOL) -> BlockResult:
    """Matrix B[i, j] = <0.., i_out| U |0.., j_in>.

    ``in_reg``/``out_reg`` may be lists of registers (concatenated, first most
    significant).  Every register not in ``out_reg`` must be |0> on the output
    side for the entry to count; pure registers are leak-checked.
    """
    ins = [in_reg] if isinstance(in_reg, str) else list(in_reg)
    outs = [out_reg] if isinstance(out_reg, str) else list(out_reg)
    N = c.n_qubits
    win = sum(c.reg(r).width for r in ins)
    wout = sum(c.reg(r).width for r in outs)
    inputs = np.zeros(1 << win, dtype=np.int64)
    j = np.arange(1 << win, dtype=np.int64)
    shift = win
    for r in ins:
        w = c.reg(r).width
        shift -= w
        sh, m = _field(c, r)
        inputs |= ((j >> shift) & m) << sh
    keys, amps = run_columns(c, inputs)
    cols = keys >> N
    local = keys & ((1 << N) - 1)
    pure = _mask(c, [r.name for r in c.registers if r.kind == "pure"])
    if zero_out is None:
        zero_out = [r.name for r in c.registers if r.name not in outs]
    zmask = _mask(c, zero_out)
    leak_sel = (local & pure) != 0
    leak = float(np.max(np.abs(amps[leak_sel]))) if np.any(leak_sel) else 0.0
    if check and leak > leak_tol:
        raise AncillaLeak(f"pure-ancilla amplitude {leak:.3e} exceeds {leak_tol:g}", leak)
    sel = (local & zmask) == 0
    rows = np.zeros(int(np.count_nonzero(sel)), dtype=np.int64)
    ls = local[sel]
    shift = wout
    for r in outs:
        w = c.reg(r).width
        shift -= w
        sh, m = _field(c, r)
        rows |= ((ls >> sh) & m) << shift
    B = np.zeros((1 << wout, 1 << win), dtype=complex)
    np.add.at(B, (rows, cols[sel]), amps[sel])
    return BlockResult(B, leak)


def extract_block(c: Circuit, desc: BlockEncodingDescriptor, check: bool = True) -> BlockResult:
    for nm in [desc.data_register, *desc.flag_registers, *desc.pure_ancilla_registers]:
        if not c.has(nm):
            raise DimensionMismatch(f"register {nm!r} missing from circuit")
    return extract_transition(c, desc.data_register, desc.data_register, check=check)


def pure_leak(c: Circuit, inputs: Sequence[int] | None = None) -> float:
    """Max pure-ancilla amplitude over basis inputs (all non-pure inputs by default)."""
    N = c.n_qubits
    pure = _mask(c, [r.name for r in c.registers if r.kind == "pure"])
    if inputs is None:
        free = [N - 1 - q for q in range(N) if not (pure >> (N - 1 - q)) & 1]
        idx = np.arange(1 << len(free), dtype=np.int64)
        inputs = np.zeros_like(idx)
        for k, b in enumerate(free):
            inputs |= ((idx >> k) & 1) << b
    keys, amps = run_columns(c, inputs)
    sel = ((keys & ((1 << N) - 1)) & pure) != 0
    return float(np.max(np.abs(amps[sel]))) if np.any(sel) else 0.0


@dataclass
class BlockReport:
    passed: bool
    spectral: float
    max_entry: float
    worst_entry: tuple[int, int]
    leak: float

    def to_json(self) -> dict:
        return {"passed": self.passed, "spectral_deviation": self.spectral,
                "max_entry_deviation": self.max_entry, "worst_entry": list(self.worst_entry),
                "pure_ancilla_leak": self.leak}


def compare_blocks(target: np.ndarray, scaled: np.ndarray, tol: float, leak: float = 0.0) -> BlockReport:
    diff = target - scaled
    spec = float(np.linalg.norm(diff, 2)) if diff.size else 0.0
    k = int(np.argmax(np.abs(diff))) if diff.size else 0
    worst = np.unravel_index(k, diff.shape) if diff.size else (0, 0)
    return BlockReport(spec <= tol, spec, float(np.abs(diff).max()) if diff.size else 0.0,
                       (int(worst[0]), int(worst[1])), leak)


def assert_block_equals(c: Circuit, desc: BlockEncodingDescriptor, target: np.ndarray,
                        tol: float = 1e-9) -> BlockReport:
    res = extract_block(c, desc)
    return compare_blocks(target, desc.scale * res.block, tol, res.leak)


def apply_circuit_inplace(c: Circuit, psi: np.ndarray) -> np.ndarray:
    """Dense full-register execution with the compiled kernel (overwrites ``psi``)."""
    cc = compile_circuit(c)
    if psi.size != 1 << cc.n_qubits:
        raise DimensionMismatch(f"state of size {psi.size} for {cc.n_qubits} qubits")
    return _run_dense(psi, cc.ops, cc.qa, cc.qb, cc.mats)


def leak_probe(c: Circuit, seed: int = 0) -> float:
    """Pure-ancilla amplitude after running a random superposition of every basis input
    with pure registers at |0>.

    The leak is linear in the input, so a generic complex combination is zero only if
    every basis input is leak-free; each input carries weight of order one, so a
    per-input leak of size e shows up at size ~e.
    """
    N = c.n_qubits
    pure = _mask(c, [r.name for r in c.registers if r.kind == "pure"])
    idx = np.arange(1 << N, dtype=np.int64)
    rng = np.random.default_rng(seed)
    psi = np.zeros(1 << N, dtype=np.complex128)
    sel = (idx & pure) == 0
    k = int(np.count_nonzero(sel))
    psi[sel] = (rng.normal(size=k) + 1j * rng.normal(size=k)) / math.sqrt(2)
    out = apply_circuit_inplace(c, psi)
    bad = (idx & pure) != 0
    return float(np.max(np.abs(out[bad]))) if np.any(bad) else 0.0
