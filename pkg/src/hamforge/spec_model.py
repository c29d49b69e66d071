"""Typed, validated Hamiltonian specifications.

A one-mode spec describes H = sum_k alpha_k P_k(x) p^m_k + conj(alpha_k) p^m_k P_k(x);
a d-mode spec carries per-dimension factors R(L, P, m) combined by tensor product.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .errors import BoundViolation, DomainError, ParityViolation, SchemaError

BOUND_GRID_POINTS = 10_000
BOUND_MARGIN = 1e-12


@dataclass(frozen=True)
class Polynomial:
    coeffs: tuple[float, ...]

    def __post_init__(self):
        c = tuple(float(v) for v in self.coeffs)
        if not c:
            raise DomainError("polynomial needs at least one coefficient")
        # trailing zeros carry no information; keep at least the constant slot
        while len(c) > 1 and c[-1] == 0.0:
            c = c[:-1]
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def parity(self) -> str:
        return "even" if self.degree % 2 == 0 else "odd"

    def __call__(self, y):
        return np.polynomial.polynomial.polyval(y, np.asarray(self.coeffs))

    def scaled_argument(self, c: float) -> "Polynomial":
        """Return y -> P(c*y)."""
        return Polynomial(tuple(a * c ** k for k, a in enumerate(self.coeffs)))

    def scaled(self, c: float) -> "Polynomial":
        return Polynomial(tuple(a * c for a in self.coeffs))

    def to_json(self) -> list[float]:
        return list(self.coeffs)


@dataclass(frozen=True)
class PolynomialCheck:
    ok: bool
    margin: float
    argmax: float


def _sup_on_interval(p: Polynomial, points: int = BOUND_GRID_POINTS) -> tuple[float, float]:
    ys = np.linspace(-1.0, 1.0, points)
    vals = np.abs(p(ys))
    k = int(np.argmax(vals))
    return float(vals[k]), float(ys[k])


def check_parity(p: Polynomial) -> None:
    q = p.degree
    for k, a in enumerate(p.coeffs):
        if k % 2 != q % 2 and a != 0.0:
            raise ParityViolation(
                f"coefficient of y^{k} is {a!r} but degree {q} demands parity {p.parity}")


def validate_polynomial(p: Polynomial, bound: float = 1.0) -> PolynomialCheck:
    """Parity and sup-norm check on a uniform grid including both endpoints.

    Raises on violation; returns the margin ``bound - max|P|`` otherwise.
    """
    if p.coeffs[p.degree] == 0.0:
        raise DomainError("the zero polynomial is not admissible")
    check_parity(p)
    sup, arg = _sup_on_interval(p)
    margin = bound - sup
    if margin < BOUND_MARGIN:
        raise BoundViolation(f"|P({arg:.6g})| = {sup:.17g} is not below {bound}")
    return PolynomialCheck(True, margin, arg)


@dataclass(frozen=True)
class GridSpec:
    n: int
    a: float
    b: float

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 2:
            raise DomainError(f"grid needs n >= 2 qubits, got {self.n!r}")
        if not (-1.0 <= self.a < self.b <= 1.0):
            raise DomainError(f"grid endpoints must satisfy -1 <= a < b <= 1, got ({self.a}, {self.b})")

    @property
    def size(self) -> int:
        return 1 << self.n

    @property
    def delta_x(self) -> float:
        return (self.b - self.a) / (self.size - 1)

    def points(self) -> np.ndarray:
        return self.a + np.arange(self.size) * self.delta_x

    def to_json(self) -> dict:
        return {"n": int(self.n), "a": self.a, "b": self.b}


@dataclass(frozen=True)
class Term:
    alpha: complex
    poly: Polynomial
    m: int
    synthetic: bool = False

    @property
    def momentum_power(self) -> int:
        return self.m


@dataclass(frozen=True)
class Factor:
    """One dimension's factor: L=0 gives P(x) p^m, L=1 gives p^m P(x)."""
    L: int
    poly: Polynomial
    m: int


@dataclass(frozen=True)
class MultiTerm:
    alpha: complex
    factors: tuple[Factor, ...]
    synthetic: bool = False


@dataclass(frozen=True)
class HamiltonianSpec:
    grid: GridSpec | None
    terms: tuple[Term, ...] = ()
    gamma: int = 0
    dims: tuple[GridSpec, ...] | None = None
    multi_terms: tuple[MultiTerm, ...] = ()
    source: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def multimode(self) -> bool:
        return self.dims is not None

    @property
    def d(self) -> int:
        return len(self.dims) if self.dims is not None else 1

    @property
    def eta(self) -> int:
        return len(self.multi_terms) if self.multimode else len(self.terms)

    @property
    def real_terms(self) -> tuple:
        src = self.multi_terms if self.multimode else self.terms
        return tuple(t for t in src if not t.synthetic)

    @property
    def n_total(self) -> int:
        if self.multimode:
            return sum(g.n for g in self.dims)
        return self.grid.n


# ---------------------------------------------------------------- parsing

def _need(obj: dict, key: str, where: str):
    if not isinstance(obj, dict) or key not in obj:
        raise SchemaError(f"missing '{key}' in {where}")
    return obj[key]


def _as_int(v, where: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise SchemaError(f"{where} must be an integer")
    return v


def _as_float(v, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(f"{where} must be a number")
    return float(v)


def _parse_alpha(v, where: str) -> complex:
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return complex(float(v), 0.0)
    if isinstance(v, list) and len(v) == 2:
        return complex(_as_float(v[0], where), _as_float(v[1], where))
    raise SchemaError(f"{where} must be [re, im]")


def _parse_grid(obj, where: str) -> GridSpec:
    if not isinstance(obj, dict):
        raise SchemaError(f"{where} must be an object")
    n = _as_int(_need(obj, "n", where), f"{where}.n")
    a = _as_float(_need(obj, "a", where), f"{where}.a")
    b = _as_float(_need(obj, "b", where), f"{where}.b")
    return GridSpec(n, a, b)


def _parse_poly(v, where: str) -> Polynomial:
    if not isinstance(v, list) or not v:
        raise SchemaError(f"{where} must be a non-empty coefficient list")
    p = Polynomial(tuple(_as_float(c, f"{where}[{i}]") for i, c in enumerate(v)))
    validate_polynomial(p)
    return p


def _parse_m(v, where: str) -> int:
    m = _as_int(v, where)
    if m < 1:
        raise DomainError(f"{where}: momentum power must be >= 1, got {m}")
    return m


def padded_count(eta: int) -> tuple[int, int]:
    gamma = max(0, math.ceil(math.log2(eta))) if eta > 1 else 0
    return 1 << gamma, gamma


def parse_spec(document: str | bytes | dict) -> HamiltonianSpec:
    """Parse and validate a JSON document (or an already-decoded dict)."""
    if isinstance(document, (str, bytes)):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"malformed JSON: {exc}") from exc
    else:
        doc = document
    if not isinstance(doc, dict):
        raise SchemaError("top-level document must be an object")
    has_terms, has_multi = "terms" in doc, "multi_terms" in doc
    if has_terms == has_multi:
        raise SchemaError("exactly one of 'terms' / 'multi_terms' must be present")
    known = {"grid", "terms", "dims", "multi_terms"}
    extra = set(doc) - known
    if extra:
        raise SchemaError(f"unknown keys: {sorted(extra)}")

    if has_terms:
        grid = _parse_grid(_need(doc, "grid", "document"), "grid")
        raw = doc["terms"]
        if not isinstance(raw, list) or not raw:
            raise SchemaError("'terms' must be a non-empty list")
        terms = []
        for k, t in enumerate(raw):
            where = f"terms[{k}]"
            if not isinstance(t, dict):
                raise SchemaError(f"{where} must be an object")
            alpha = _parse_alpha(_need(t, "alpha", where), f"{where}.alpha")
            if alpha == 0:
                raise DomainError(f"{where}: alpha must be nonzero")
            poly = _parse_poly(_need(t, "poly", where), f"{where}.poly")
            m = _parse_m(_need(t, "m", where), f"{where}.m")
            terms.append(Term(alpha, poly, m))
        size, gamma = padded_count(len(terms))
        while len(terms) < size:
            terms.append(Term(0j, terms[0].poly, terms[0].m, synthetic=True))
        return HamiltonianSpec(grid=grid, terms=tuple(terms), gamma=gamma, source=doc)

    dims_raw = _need(doc, "dims", "document")
    if not isinstance(dims_raw, list) or not dims_raw:
        raise SchemaError("'dims' must be a non-empty list")
    dims = tuple(_parse_grid(g, f"dims[{i}]") for i, g in enumerate(dims_raw))
    raw = doc["multi_terms"]
    if not isinstance(raw, list) or not raw:
        raise SchemaError("'multi_terms' must be a non-empty list")
    mterms = []
    for k, t in enumerate(raw):
        where = f"multi_terms[{k}]"
        if not isinstance(t, dict):
            raise SchemaError(f"{where} must be an object")
        alpha = _parse_alpha(_need(t, "alpha", where), f"{where}.alpha")
        if alpha == 0:
            raise DomainError(f"{where}: alpha must be nonzero")
        fac_raw = _need(t, "factors", where)
        if not isinstance(fac_raw, list) or len(fac_raw) != len(dims):
            raise SchemaError(f"{where}.factors must list one factor per dimension")
        facs = []
        for y, f in enumerate(fac_raw):
            fw = f"{where}.factors[{y}]"
            L = _as_int(_need(f, "L", fw), f"{fw}.L")
            if L not in (0, 1):
                raise SchemaError(f"{fw}.L must be 0 or 1")
            facs.append(Factor(L, _parse_poly(_need(f, "poly", fw), f"{fw}.poly"),
                               _parse_m(_need(f, "m", fw), f"{fw}.m")))
        mterms.append(MultiTerm(alpha, tuple(facs)))
    size, gamma = padded_count(len(mterms))
    while len(mterms) < size:
        mterms.append(MultiTerm(0j, mterms[0].factors, synthetic=True))
    spec = HamiltonianSpec(grid=None, terms=(), gamma=gamma, dims=dims,
                           multi_terms=tuple(mterms), source=doc)
    from .reference import check_hermitian  # deferred: reference imports this module
    check_hermitian(spec)
    return spec


def load_spec(path: str) -> HamiltonianSpec:
    with open(path, "rb") as fh:
        return parse_spec(fh.read())


def spec_to_document(spec: HamiltonianSpec) -> dict:
    """Inverse of parse_spec for real (non-synthetic) terms."""
    if not spec.multimode:
        return {"grid": spec.grid.to_json(),
                "terms": [{"alpha": [t.alpha.real, t.alpha.imag], "poly": t.poly.to_json(), "m": t.m}
                          for t in spec.real_terms]}
    return {"dims": [g.to_json() for g in spec.dims],
            "multi_terms": [{"alpha": [t.alpha.real, t.alpha.imag],
                             "factors": [{"L": f.L, "poly": f.poly.to_json(), "m": f.m} for f in t.factors]}
                            for t in spec.real_terms]}


def simple_spec(n: int, terms: Sequence[tuple[Any, Sequence[float], int]], a: float = -1.0,
                b: float = 1.0) -> HamiltonianSpec:
    """Shorthand used by tests and demos: terms as (alpha, coeffs, m)."""
    doc = {"grid": {"n": n, "a": a, "b": b},
           "terms": [{"alpha": [complex(al).real, complex(al).imag], "poly": list(c), "m": m}
                     for al, c, m in terms]}
    return parse_spec(doc)
