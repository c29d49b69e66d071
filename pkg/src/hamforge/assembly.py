"""One-term auxiliaries, coefficient preparation, A_H and the full U_H (1-mode and d-mode).

Register conventions for the assembled encodings:

* ``lcu``       term-selection register (flag)
* ``mflag``     momentum-oracle flag, ``plcu``/``psig`` polynomial-oracle flags
* ``work``/``mid`` auxiliary qubits of the amplitude oracle (flag)
* ``row``/``col`` the two index registers; on exit ``col`` holds the data
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .circuit import Builder, Circuit, inverse_of, transpose_of
from .errors import DegenerateSpec, SparsityOverflow
from .primitives import (build_banded_sparse_access, build_state_prep, emit_banded_access,
                         emit_controlled, emit_momentum_oracle, momentum_thetas)
from .qsvt import build_coordinate_polynomial_oracle
from .reference import (SparsityPattern, band_offsets, build_hamiltonian_dense, build_p_matrix,
                        padding_offsets)
from .sim import BlockEncodingDescriptor, describe
from .spec_model import GridSpec, HamiltonianSpec, Polynomial

POLY_THEN_P = "poly_then_p"   # A_{P p^m}: polynomial oracle on the row after index mapping
P_THEN_POLY = "p_then_poly"   # A_{p^m P}: polynomial oracle on the column first


def _ceil_log2(k: int) -> int:
    return max(0, math.ceil(math.log2(k))) if k > 1 else 0


# ------------------------------------------------------------ band planning

@dataclass(frozen=True)
class MomentumBands:
    n: int
    m: int
    offsets: tuple[int, ...]
    values: tuple[complex, ...]

    @property
    def l(self) -> int:
        return _ceil_log2(len(self.offsets))

    @property
    def n_pm(self) -> float:
        return float(max(abs(v) ** 2 for v in self.values))


@lru_cache(maxsize=128)
def momentum_bands(grid: GridSpec, m: int) -> MomentumBands:
    pm = np.linalg.matrix_power(build_p_matrix(grid), m)
    offs = band_offsets(pm)
    return MomentumBands(grid.n, m, tuple(offs), tuple(complex(pm[0, r]) for r in offs))


def shared_slots(n: int, bands: list[MomentumBands], min_l: int) -> tuple[int, list[int]]:
    """Common slot set S (size 2^l) containing every term's real offsets."""
    union = sorted(set(o for bd in bands for o in bd.offsets))
    l = max(_ceil_log2(len(union)), min_l)
    if l > n:
        raise SparsityOverflow(f"{len(union)} offsets need more than {n} index bits")
    return l, union + padding_offsets(n, union, (1 << l) - len(union))


def extended_pattern(bd: MomentumBands, S: list[int], l_sh: int) -> SparsityPattern:
    """Slots of one auxiliary: its bands, then padding and the rest of S, so that every
    l_sh-bit sparse value lands inside the shared set."""
    real = list(bd.offsets)
    rest = [s for s in S if s not in real]
    slots = real + rest
    vals = list(bd.values) + [0j] * (len(slots) - len(real))
    return SparsityPattern(bd.n, l_sh, bd.offsets, bd.values, tuple(slots), tuple(vals))


def shared_l_target(n: int, ms: list[int]) -> int:
    """Index-register width suggested by the sparsity bound max(2m+1), capped at n."""
    return min(n, _ceil_log2(max(2 * m + 1 for m in ms)))


# ------------------------------------------------------------- ledger

@dataclass
class TermRecord:
    index: int
    synthetic: bool
    alpha: complex
    m: tuple[int, ...]
    l: tuple[int, ...]
    n_pm: tuple[float, ...]
    c_P: tuple[float, ...]
    n_x: tuple[float, ...]
    weight: float   # prod c_P sqrt(2^l N_pm)


@dataclass
class NormalizationLedger:
    terms: list[TermRecord] = field(default_factory=list)
    N_H: float = 0.0
    l_H: tuple[int, ...] = ()
    multimode: bool = False

    def to_json(self) -> dict:
        return {"N_H": self.N_H, "l_H": list(self.l_H), "multimode": self.multimode,
                "terms": [{"index": t.index, "synthetic": t.synthetic,
                           "alpha": [t.alpha.real, t.alpha.imag], "m": list(t.m), "l": list(t.l),
                           "N_pm": list(t.n_pm), "c_P": list(t.c_P), "N_x": list(t.n_x),
                           "weight": t.weight} for t in self.terms]}


# ---------------------------------------------------------- one-term auxiliary

def emit_aux(b: Builder, grid: GridSpec, poly: Polynomial, bd: MomentumBands,
             pat: SparsityPattern, ordering: str, regs: dict) -> None:
    """Emit one auxiliary on the qubits in ``regs`` (keys: mflag plcu psig work mid row col)."""
    row, col = regs["row"], regs["col"]
    lk = bd.l
    s = row[len(row) - lk:] if lk else []
    for q in s:
        b.h(q)
    if lk:
        head = SparsityPattern(bd.n, lk, bd.offsets, bd.values, pat.slots[:1 << lk],
                               pat.slot_values[:1 << lk])
        th, _ = momentum_thetas(head, None, bd.m)
        emit_momentum_oracle(b, regs["mflag"], s, th, bd.m)
    else:
        # a single band: scalar amplitude, the phase alone carries the value
        v = bd.values[0] * (1j ** bd.m) / math.sqrt(bd.n_pm)
        b.gphase(math.remainder(float(np.angle(v)) - math.pi * bd.m / 2, 2 * math.pi))
    oracle = build_coordinate_polynomial_oracle(grid, poly)
    wires = {"lcu": [regs["plcu"]], "sig": [regs["psig"]], "work": regs["work"][:grid.n],
             "mid": [regs["mid"]]}
    if ordering == P_THEN_POLY:
        b.embed(oracle.circuit, {**wires, "data": col})
        emit_banded_access(b, row, col, pat)
    else:
        emit_banded_access(b, row, col, pat)
        b.embed(oracle.circuit, {**wires, "data": row})


def _aux_registers(b: Builder, n: int, work: int, prefix: str = "") -> dict:
    regs = {}
    for nm in ("mflag", "plcu", "psig"):
        (regs[nm],) = b.add_register(prefix + nm, 1, "flag")
    regs["work"] = b.add_register(prefix + "work", work, "flag")
    (regs["mid"],) = b.add_register(prefix + "mid", 1, "flag")
    return regs


def aux_prefactor(grid: GridSpec, poly: Polynomial, m: int) -> tuple[float, float, float]:
    """(weight, c_P, N_pm) with weight = c_P sqrt(2^l N_pm)."""
    bd = momentum_bands(grid, m)
    c_P = build_coordinate_polynomial_oracle(grid, poly).c_P
    return c_P * math.sqrt((1 << bd.l) * bd.n_pm), c_P, bd.n_pm


def build_one_term_aux(grid: GridSpec, term, ordering: str = POLY_THEN_P) -> tuple[Circuit, BlockEncodingDescriptor]:
    """Standalone auxiliary; block <0, i|_row A |0, j>_col = (-1)^m X_ij / weight,
    X = P(x) p^m (poly_then_p) or p^m P(x) (p_then_poly)."""
    bd = momentum_bands(grid, term.m)
    l_sh, S = shared_slots(grid.n, [bd], bd.l)
    pat = extended_pattern(bd, S, l_sh)
    b = Builder()
    regs = _aux_registers(b, grid.n, grid.n)
    regs["row"] = b.add_register("row", grid.n, "data")
    regs["col"] = b.add_register("col", grid.n, "data")
    emit_aux(b, grid, term.poly, bd, pat, ordering, regs)
    circ = b.finalize()
    weight, c_P, npm = aux_prefactor(grid, term.poly, term.m)
    return circ, describe(circ, weight, "col", output_register="row", sign=(-1) ** term.m,
                          l=bd.l, N_pm=npm, c_P=c_P, ordering=ordering)


# ------------------------------------------------------------ 1-mode assembly

@dataclass
class Plan:
    spec: HamiltonianSpec
    ledger: NormalizationLedger
    amps: np.ndarray
    l_H: int
    S: list[int]
    bands: list[MomentumBands]


def plan_one_mode(spec: HamiltonianSpec) -> Plan:
    g = spec.grid
    bands = [momentum_bands(g, t.m) for t in spec.terms]
    l_H, S = shared_slots(g.n, bands, shared_l_target(g.n, [t.m for t in spec.terms]))
    led = NormalizationLedger(l_H=(l_H,))
    weights = []
    nx = float(np.linalg.norm(g.points()))
    for k, (t, bd) in enumerate(zip(spec.terms, bands)):
        w, c_P, npm = aux_prefactor(g, t.poly, t.m)
        weights.append(w)
        led.terms.append(TermRecord(k, t.synthetic, t.alpha, (t.m,), (bd.l,), (npm,), (c_P,), (nx,), w))
    led.N_H = 2.0 * sum(abs(t.alpha) * w for t, w in zip(spec.terms, weights) if not t.synthetic)
    if led.N_H == 0:
        raise DegenerateSpec("all coefficients vanish")
    eta = spec.eta
    amps = np.zeros(2 * eta, dtype=complex)
    for k, (t, w) in enumerate(zip(spec.terms, weights)):
        sgn = (-1) ** t.m
        amps[k] = np.sqrt(sgn * t.alpha * w / led.N_H)
        amps[k + eta] = np.sqrt(sgn * np.conj(t.alpha) * w / led.N_H)
    return Plan(spec, led, amps, l_H, S, bands)


def build_coeff_prep(spec: HamiltonianSpec, ledger: NormalizationLedger | None = None) -> Circuit:
    """U_alpha on the ``lcu`` register (gamma+1 qubits in 1-mode, gamma in d-mode)."""
    plan = plan_multi(spec) if spec.multimode else plan_one_mode(spec)
    return build_state_prep(plan.amps, "lcu")


def _emit_branches_one_mode(b: Builder, plan: Plan, regs: dict, lcu: list[int]) -> None:
    spec = plan.spec
    g = spec.grid
    eta = spec.eta
    w = len(lcu)
    for half, ordering in ((0, POLY_THEN_P), (1, P_THEN_POLY)):
        for k, (t, bd) in enumerate(zip(spec.terms, plan.bands)):
            idx = k + half * eta
            pols = [bool((idx >> (w - 1 - j)) & 1) for j in range(w)]
            pat = extended_pattern(bd, plan.S, plan.l_H)
            sub = Builder()
            sregs = _aux_registers(sub, g.n, g.n)
            sregs["row"] = sub.add_register("row", g.n)
            sregs["col"] = sub.add_register("col", g.n)
            if t.synthetic:
                emit_banded_access(sub, sregs["row"], sregs["col"], pat)
            else:
                emit_aux(sub, g, t.poly, bd, pat, ordering, sregs)
            aux = sub.finalize()
            wiring = {nm: (regs[nm] if isinstance(regs[nm], list) else [regs[nm]])
                      for nm in ("mflag", "plcu", "psig", "work", "mid", "row", "col")}
            emit_controlled(b, aux, wiring, lcu, pols)


def build_A_H(spec: HamiltonianSpec) -> tuple[Circuit, BlockEncodingDescriptor, NormalizationLedger]:
    """LCU of the one-term auxiliaries: <0, i|_row A_H |0, j>_col = H_ij / N_H."""
    if spec.multimode:
        raise ValueError("use build_U_H_multidim for d-mode specs")
    plan = plan_one_mode(spec)
    g = spec.grid
    b = Builder()
    lcu = b.add_register("lcu", spec.gamma + 1, "flag")
    regs = _aux_registers(b, g.n, g.n)
    regs["row"] = b.add_register("row", g.n, "data")
    regs["col"] = b.add_register("col", g.n, "data")
    prep = build_state_prep(plan.amps, "lcu")
    b.embed(prep, {"lcu": lcu})
    _emit_branches_one_mode(b, plan, regs, lcu)
    b.embed(transpose_of(prep), {"lcu": lcu})
    circ = b.finalize()
    desc = describe(circ, plan.ledger.N_H, "col", output_register="row")
    return circ, desc, plan.ledger


def hamiltonian_pattern(n: int, S: list[int], l: int) -> SparsityPattern:
    """Offsets of H (column minus row) are the negated auxiliary offsets."""
    N = 1 << n
    neg = [(-s) % N for s in S]
    return SparsityPattern(n, l, tuple(sorted(neg)), tuple([0j] * len(neg)), tuple(neg),
                           tuple([0j] * len(neg)))


def _emit_fold(b: Builder, row: list[int], col: list[int], n: int, S: list[int], l: int) -> None:
    """O^BS_H dagger (sparse=col, base=row), H^l on col's low bits, then swap row <-> col."""
    bs = build_banded_sparse_access(hamiltonian_pattern(n, S, l), n)
    b.embed(inverse_of(bs), {"sparse": col, "base": row})
    for q in col[n - l:]:
        b.h(q)
    for r, c in zip(row, col):
        b.cx(r, c); b.cx(c, r); b.cx(r, c)


def check_sparsity(spec: HamiltonianSpec, H: np.ndarray | None = None) -> dict:
    """Observed band structure of the dense Hamiltonian against the assembled pattern."""
    H = build_hamiltonian_dense(spec) if H is None else H
    if spec.multimode:
        return {"bands": len(band_offsets(H))}
    plan = plan_one_mode(spec)
    n = spec.grid.n
    obs = band_offsets(H)
    allowed = set((-s) % (1 << n) for s in plan.S)
    bound = max(2 * t.m + 1 for t in spec.real_terms)
    if not set(obs) <= allowed or len(obs) > 1 << plan.l_H:
        raise SparsityOverflow(f"observed offsets {obs} exceed the assembled pattern")
    return {"bands": len(obs), "bound": bound, "within_bound": len(obs) <= bound, "l": plan.l_H}


@lru_cache(maxsize=16)
def _build_U_H_cached(spec: HamiltonianSpec) -> tuple[Circuit, BlockEncodingDescriptor]:
    plan = plan_one_mode(spec)
    g = spec.grid
    n, l = g.n, plan.l_H
    b = Builder()
    lcu = b.add_register("lcu", spec.gamma + 1, "flag")
    regs = _aux_registers(b, n, n)
    row_hi = b.add_register("row_hi", n - l, "pure") if n > l else []
    row_lo = b.add_register("row_lo", l, "flag") if l else []
    col = b.add_register("col", n, "data")
    regs["row"], regs["col"] = row_hi + row_lo, col
    prep = build_state_prep(plan.amps, "lcu")
    b.embed(prep, {"lcu": lcu})
    _emit_branches_one_mode(b, plan, regs, lcu)
    b.embed(transpose_of(prep), {"lcu": lcu})
    _emit_fold(b, regs["row"], col, n, plan.S, l)
    circ = b.finalize()
    scale = math.sqrt(1 << l) * plan.ledger.N_H
    desc = describe(circ, scale, "col", l=l, gamma=spec.gamma, N_H=plan.ledger.N_H,
                    quoted_flag_width=l + spec.gamma + 4, ledger=plan.ledger.to_json())
    return circ, desc


def build_U_H(spec: HamiltonianSpec) -> tuple[Circuit, BlockEncodingDescriptor]:
    """(sqrt(2^l) N_H, s, 0)-block-encoding of the dense Hamiltonian on register ``col``."""
    if spec.multimode:
        return build_U_H_multidim(spec)
    return _build_U_H_cached(spec)


# ------------------------------------------------------------ d-mode assembly

@dataclass
class MultiPlan:
    spec: HamiltonianSpec
    ledger: NormalizationLedger
    amps: np.ndarray
    l: list[int]
    S: list[list[int]]
    bands: list[list[MomentumBands]]   # [term][dim]


def plan_multi(spec: HamiltonianSpec) -> MultiPlan:
    dims = spec.dims
    bands = [[momentum_bands(g, f.m) for g, f in zip(dims, t.factors)] for t in spec.multi_terms]
    ls, Ss = [], []
    for y, g in enumerate(dims):
        ly, Sy = shared_slots(g.n, [bt[y] for bt in bands],
                              shared_l_target(g.n, [t.factors[y].m for t in spec.multi_terms]))
        ls.append(ly)
        Ss.append(Sy)
    led = NormalizationLedger(l_H=tuple(ls), multimode=True)
    weights = []
    for k, t in enumerate(spec.multi_terms):
        ws, cps, npms, nxs = [], [], [], []
        for g, f, bd in zip(dims, t.factors, bands[k]):
            w, c_P, npm = aux_prefactor(g, f.poly, f.m)
            ws.append(w); cps.append(c_P); npms.append(npm)
            nxs.append(float(np.linalg.norm(g.points())))
        w = float(np.prod(ws))
        weights.append(w)
        led.terms.append(TermRecord(k, t.synthetic, t.alpha, tuple(f.m for f in t.factors),
                                    tuple(bd.l for bd in bands[k]), tuple(npms), tuple(cps),
                                    tuple(nxs), w))
    led.N_H = sum(abs(t.alpha) * w for t, w in zip(spec.multi_terms, weights) if not t.synthetic)
    if led.N_H == 0:
        raise DegenerateSpec("all coefficients vanish")
    amps = np.zeros(spec.eta, dtype=complex)
    for k, (t, w) in enumerate(zip(spec.multi_terms, weights)):
        sgn = (-1) ** sum(f.m for f in t.factors)
        amps[k] = np.sqrt(sgn * t.alpha * w / led.N_H)
    return MultiPlan(spec, led, amps, ls, Ss, bands)


def _multi_layout(b: Builder, spec: HamiltonianSpec, plan: MultiPlan, fold: bool) -> dict:
    dims = spec.dims
    lay = {"lcu": b.add_register("lcu", spec.gamma, "flag") if spec.gamma else []}
    lay["dims"] = []
    for y in range(len(dims)):
        d = {}
        for nm in ("mflag", "plcu", "psig"):
            (d[nm],) = b.add_register(f"{nm}{y}", 1, "flag")
        lay["dims"].append(d)
    wmax = max(g.n for g in dims)
    work = b.add_register("work", wmax, "flag")
    (mid,) = b.add_register("mid", 1, "flag")
    rows = []
    for y, g in enumerate(dims):
        if fold:
            l = plan.l[y]
            hi = b.add_register(f"row{y}_hi", g.n - l, "pure") if g.n > l else []
            lo = b.add_register(f"row{y}_lo", l, "flag") if l else []
            rows.append(hi + lo)
        else:
            rows.append(None)
    if not fold:
        allrow = b.add_register("row", sum(g.n for g in dims), "data")
        off = 0
        for y, g in enumerate(dims):
            rows[y] = allrow[off:off + g.n]
            off += g.n
    col = b.add_register("col", sum(g.n for g in dims), "data")
    cols, off = [], 0
    for g in dims:
        cols.append(col[off:off + g.n])
        off += g.n
    for y, d in enumerate(lay["dims"]):
        d.update(work=work, mid=mid, row=rows[y], col=cols[y])
    return lay


def _multi_aux_circuit(spec: HamiltonianSpec, plan: MultiPlan, k: int) -> Circuit:
    t = spec.multi_terms[k]
    b = Builder()
    lay = _multi_layout(b, spec, plan, fold=False)
    for y, (g, f) in enumerate(zip(spec.dims, t.factors)):
        bd = plan.bands[k][y]
        pat = extended_pattern(bd, plan.S[y], plan.l[y])
        d = lay["dims"][y]
        if t.synthetic:
            emit_banded_access(b, d["row"], d["col"], pat)
        else:
            emit_aux(b, g, f.poly, bd, pat, POLY_THEN_P if f.L == 0 else P_THEN_POLY, d)
    return b.finalize()


def build_one_term_aux_multidim(spec: HamiltonianSpec, k: int) -> tuple[Circuit, BlockEncodingDescriptor]:
    """Tensor product of per-dimension auxiliaries for term k (``col`` -> ``row``)."""
    plan = plan_multi(spec)
    circ = _multi_aux_circuit(spec, plan, k)
    t = spec.multi_terms[k]
    return circ, describe(circ, plan.ledger.terms[k].weight, "col", output_register="row",
                          sign=(-1) ** sum(f.m for f in t.factors))


@lru_cache(maxsize=8)
def build_U_H_multidim(spec: HamiltonianSpec) -> tuple[Circuit, BlockEncodingDescriptor]:
    plan = plan_multi(spec)
    b = Builder()
    lay = _multi_layout(b, spec, plan, fold=True)
    prep = build_state_prep(plan.amps, "lcu")
    lcu = lay["lcu"]
    if lcu:
        b.embed(prep, {"lcu": lcu})
    else:
        b.extend(prep.gates)
    w = len(lcu)
    for k in range(spec.eta):
        aux = _multi_aux_circuit(spec, plan, k)
        wiring = {}
        for y, d in enumerate(lay["dims"]):
            for nm in ("mflag", "plcu", "psig"):
                wiring[f"{nm}{y}"] = [d[nm]]
        wiring["work"] = lay["dims"][0]["work"]
        wiring["mid"] = [lay["dims"][0]["mid"]]
        wiring["row"] = [q for d in lay["dims"] for q in d["row"]]
        wiring["col"] = [q for d in lay["dims"] for q in d["col"]]
        pols = [bool((k >> (w - 1 - j)) & 1) for j in range(w)]
        emit_controlled(b, aux, wiring, lcu, pols)
    if lcu:
        b.embed(transpose_of(prep), {"lcu": lcu})
    else:
        b.extend(transpose_of(prep).gates)
    for y, (g, d) in enumerate(zip(spec.dims, lay["dims"])):
        _emit_fold(b, d["row"], d["col"], g.n, plan.S[y], plan.l[y])
    circ = b.finalize()
    l = sum(plan.l)
    scale = math.sqrt(1 << l) * plan.ledger.N_H
    desc = describe(circ, scale, "col", l=l, gamma=spec.gamma, N_H=plan.ledger.N_H,
                    quoted_flag_width=l + spec.gamma + 3 * spec.d, ledger=plan.ledger.to_json())
    return circ, desc


def index_transition(c: Circuit, check: bool = True) -> np.ndarray:
    """B[i, j] = <0.., i|_row <j|_col U |0.., 0>_row |j>_col for an auxiliary-style circuit
    whose column register is carried through unchanged."""
    from .sim import extract_transition
    n = c.reg("col").width
    full = extract_transition(c, "col", ["row", "col"], check=check).block
    N = 1 << n
    j = np.arange(N)
    return full.reshape(N, N, N)[:, j, j]
