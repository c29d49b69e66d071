"""Dense reference matrices: the verification oracle for every circuit."""
from __future__ import annotations

import io
from dataclasses import dataclass
from functools import reduce

import numpy as np
from scipy.linalg import hadamard

from .errors import DegenerateState, HermiticityError, PatternOverflow
from .spec_model import GridSpec, HamiltonianSpec, Polynomial

HERMITIAN_TOL = 1e-12
BAND_THRESHOLD = 1e-14


def build_x_matrix(grid: GridSpec) -> tuple[np.ndarray, float]:
    """Diagonal coordinate matrix and its Frobenius norm N_x."""
    xs = grid.points()
    return np.diag(xs).astype(complex), float(np.sqrt(np.sum(xs ** 2)))


def build_p_matrix(grid: GridSpec) -> np.ndarray:
    """Periodic central-difference momentum matrix (-i/2dx) * (shift_up - shift_down)."""
    N = grid.size
    c = np.zeros((N, N), dtype=complex)
    for i in range(N):
        c[i, (i + 1) % N] += 1.0
        c[i, (i - 1) % N] -= 1.0
    return (-1j / (2.0 * grid.delta_x)) * c


def poly_of_diag(xs: np.ndarray, p: Polynomial) -> np.ndarray:
    return np.diag(p(xs)).astype(complex)


@dataclass(frozen=True)
class SparsityPattern:
    """First-row band layout of a banded (cyclically shifted) matrix.

    ``offsets``/``values`` are the real bands in increasing order; ``slots`` extends
    them to 2^l entries, padding slots carrying distinct unused offsets and value 0.
    """
    n: int
    l: int
    offsets: tuple[int, ...]
    values: tuple[complex, ...]
    slots: tuple[int, ...]
    slot_values: tuple[complex, ...]

    @property
    def bands(self) -> int:
        return len(self.offsets)


def padding_offsets(n: int, used, count: int) -> list[int]:
    """Distinct fillers taken from 0, 1, -1, 2, -2, ... (mod 2^n), skipping used offsets."""
    N = 1 << n
    used = set(int(u) % N for u in used)
    out: list[int] = []
    k = 0
    while len(out) < count:
        for cand in ((k,) if k == 0 else (k, -k)):
            r = cand % N
            if r not in used:
                used.add(r)
                out.append(r)
                if len(out) == count:
                    break
        k += 1
        if k > N:
            raise PatternOverflow("not enough free offsets for padding")
    return out


def make_pattern(n: int, offsets, values=None, l: int | None = None) -> SparsityPattern:
    N = 1 << n
    offs = [int(o) % N for o in offsets]
    vals = [0j] * len(offs) if values is None else [complex(v) for v in values]
    order = sorted(range(len(offs)), key=lambda k: offs[k])
    offs = [offs[k] for k in order]
    vals = [vals[k] for k in order]
    if len(set(offs)) != len(offs):
        raise ValueError("offsets must be distinct modulo 2^n")
    need = max(0, int(np.ceil(np.log2(max(len(offs), 1)))))
    if l is None:
        l = need
    if len(offs) > (1 << l):
        raise PatternOverflow(f"{len(offs)} bands do not fit into 2^{l} slots")
    if l > n:
        raise PatternOverflow(f"l={l} exceeds n={n}")
    pad = padding_offsets(n, offs, (1 << l) - len(offs))
    return SparsityPattern(n, l, tuple(offs), tuple(vals), tuple(offs + pad),
                           tuple(vals + [0j] * len(pad)))


def band_offsets(mat: np.ndarray, threshold: float = BAND_THRESHOLD) -> list[int]:
    """All offsets (j - i) mod N carrying a nonzero in any row."""
    N = mat.shape[0]
    ii, jj = np.nonzero(np.abs(mat) > threshold)
    return sorted(set(((jj - ii) % N).tolist()))


def pattern_from_matrix(mat: np.ndarray, l: int | None = None) -> SparsityPattern:
    n = int(round(np.log2(mat.shape[0])))
    offs = band_offsets(mat)
    return make_pattern(n, offs, [mat[0, r] for r in offs], l)


def matrix_power_banded(p: np.ndarray, m: int) -> tuple[np.ndarray, SparsityPattern]:
    pm = np.linalg.matrix_power(p, m)
    return pm, pattern_from_matrix(pm)


def term_matrices(grid: GridSpec, poly: Polynomial, m: int) -> tuple[np.ndarray, np.ndarray]:
    """(P(x) p^m, p^m P(x)) for one grid."""
    xs = grid.points()
    P = poly_of_diag(xs, poly)
    pm = np.linalg.matrix_power(build_p_matrix(grid), m)
    return P @ pm, pm @ P


def build_hamiltonian_dense(spec: HamiltonianSpec) -> np.ndarray:
    if not spec.multimode:
        N = spec.grid.size
        H = np.zeros((N, N), dtype=complex)
        for t in spec.terms:
            if t.synthetic:
                continue
            a, b = term_matrices(spec.grid, t.poly, t.m)
            H += t.alpha * a + np.conj(t.alpha) * b
        return H
    dim = 1 << spec.n_total
    H = np.zeros((dim, dim), dtype=complex)
    for t in spec.multi_terms:
        if t.synthetic:
            continue
        facs = [term_matrices(g, f.poly, f.m)[f.L] for g, f in zip(spec.dims, t.factors)]
        H += t.alpha * reduce(np.kron, facs)
    return H


def check_hermitian(spec: HamiltonianSpec) -> np.ndarray:
    H = build_hamiltonian_dense(spec)
    dev = float(np.max(np.abs(H - H.conj().T))) if H.size else 0.0
    if dev > HERMITIAN_TOL * max(1.0, float(np.max(np.abs(H)))):
        raise HermiticityError(f"assembled matrix deviates from Hermitian by {dev:.3e}")
    return H


@dataclass(frozen=True)
class WalshCoefficients:
    beta: np.ndarray
    support_bound: int
    norm: float  # N_psi, the norm of the pre-transform vector


def walsh_coefficients(diag_values, poly_weights) -> WalshCoefficients:
    xs = np.asarray(diag_values, dtype=float)
    w = np.asarray(poly_weights, dtype=complex)
    N = xs.size
    n = int(round(np.log2(N)))
    if 1 << n != N:
        raise ValueError("diag_values length must be a power of two")
    f = np.polynomial.polynomial.polyval(xs, w)
    nrm = float(np.linalg.norm(f))
    if nrm == 0.0:
        raise DegenerateState("pre-transform vector has zero norm")
    beta = hadamard(N) @ f / (np.sqrt(N) * nrm)
    nz = np.nonzero(w)[0]
    chi = int(nz[-1]) if nz.size else 0
    return WalshCoefficients(beta, chi, nrm)


def inverse_walsh(beta: np.ndarray) -> np.ndarray:
    N = beta.size
    return hadamard(N) @ beta / np.sqrt(N)


def popcount(i: int) -> int:
    return bin(i).count("1")


def dense_to_csv(mat: np.ndarray, threshold: float = 1e-14) -> str:
    buf = io.StringIO()
    buf.write("row,col,re,im\n")
    for i, j in zip(*np.nonzero(np.abs(mat) > threshold)):
        v = mat[i, j]
        buf.write(f"{i},{j},{v.real:.17g},{v.imag:.17g}\n")
    return buf.getvalue()
