import sys
import numpy as np
import pytest

from hamforge.sim import run_columns
from hamforge.spec_model import parse_spec, simple_spec

# one-mode acceptance corpus: (label, n, terms, a, b)
CORPUS = [
    ("n2_q1_m1_e1", 2, [(1.0, [0, 0.9], 1)], -1.0, 1.0),
    ("n3_q1_m1_e1_complex", 3, [(0.5 + 0.2j, [0, 0.9], 1)], -1.0, 1.0),
    ("n4_q1_m1_e1", 4, [(1.0, [0, 0.9], 1)], -1.0, 1.0),
    ("n2_q2_m2_e1", 2, [(0.3, [0.2, 0, 0.5], 2)], -1.0, 1.0),
    ("n2_q3_e2", 2, [(1.0, [0, 0.9], 1), (0.4j, [0, -0.3, 0, 0.6], 2)], -1.0, 1.0),
    ("n3_q2_e2", 3, [(1.0, [0, 0.9], 1), (0.4, [0.1, 0, 0.5], 2)], -1.0, 1.0),
    ("n3_q3_asym", 3, [(0.7, [0, 0.5, 0, 0.3], 1)], -0.5, 0.8),
]

DMODE_DOC = {
    "dims": [{"n": 2, "a": -1, "b": 1}, {"n": 2, "a": -1, "b": 1}],
    "multi_terms": [
        {"alpha": [0.5, 0], "factors": [{"L": 0, "poly": [0, 0.9], "m": 1}, {"L": 0, "poly": [0.5], "m": 1}]},
        {"alpha": [0.5, 0], "factors": [{"L": 1, "poly": [0, 0.9], "m": 1}, {"L": 0, "poly": [0.5], "m": 1}]},
    ],
}


def corpus_spec(entry):
    _, n, terms, a, b = entry
    return simple_spec(n, terms, a, b)


def dmode_spec():
    return parse_spec(DMODE_DOC)


def basis_outputs(c, inputs):
    """Run basis inputs; return {column: {output index: amplitude}} for nonzero outputs."""
    keys, amps = run_columns(c, inputs)
    N = c.n_qubits
    out = {}
    for k, a in zip(keys, amps):
        out.setdefault(int(k >> N), {})[int(k & ((1 << N) - 1))] = a
    return out


def field_value(c, name, index):
    r = c.reg(name)
    N = c.n_qubits
    return (index >> (N - r.start - r.width)) & ((1 << r.width) - 1)


def place(c, **values):
    N = c.n_qubits
    v = 0
    for name, val in values.items():
        r = c.reg(name)
        v |= int(val) << (N - r.start - r.width)
    return v


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20261018)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
