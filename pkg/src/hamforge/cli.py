"""Command-line front end: build, verify, evolve, count, primitive.

Exit codes: 0 ok, 2 schema, 3 domain (including the qubit cap), 4 construction,
5 verification failure.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import tempfile
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .errors import DomainError, HamforgeError, SchemaError

EXIT_OK, EXIT_SCHEMA, EXIT_DOMAIN, EXIT_BUILD, EXIT_VERIFY = 0, 2, 3, 4, 5


class CapExceeded(DomainError):
    pass


@dataclass
class RunManifest:
    command: str
    spec_digest: str | None
    tool_version: str = __version__
    tolerances: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    wall_clock: float = 0.0

    def to_json(self) -> dict:
        return asdict(self)


def _digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _atomic_write(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".hamforge-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_all(files: dict[str, str]) -> None:
    # everything is computed before the first write; each file lands atomically
    for path, text in files.items():
        _atomic_write(path, text)


def _read_spec(path: str):
    from .spec_model import parse_spec
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    return parse_spec(raw), _digest(raw)


def _estimate_qubits(spec) -> int:
    """Register qubits of U_H before any pool ancillas (a lower bound on the total)."""
    if spec.multimode:
        return spec.gamma + 3 * spec.d + max(g.n for g in spec.dims) + 1 + 2 * spec.n_total
    n = spec.grid.n
    return spec.gamma + 1 + 3 + n + 1 + 2 * n


def _guard(spec, cap: int, actual: int | None = None) -> None:
    est = _estimate_qubits(spec) if actual is None else actual
    if est > cap:
        raise CapExceeded(f"{est} qubits exceed the cap of {cap}")


def _gate_text(circ, digest: str | None) -> str:
    from .circuit import export_gates
    head = f"# hamforge {__version__}" + (f" spec-sha256 {digest}" if digest else "") + "\n"
    return head + export_gates(circ)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if hasattr(o, "to_json"):
        return o.to_json()
    raise TypeError(type(o).__name__)


def _descriptor_json(circ, desc) -> dict:
    return {**desc.to_json(), "n_qubits": circ.n_qubits,
            "registers": [{"name": r.name, "start": r.start, "width": r.width, "kind": r.kind}
                          for r in circ.registers]}


# ---------------------------------------------------------------- commands

def cmd_build(args) -> int:
    from .assembly import build_U_H
    from .resources import audit_spec
    t0 = time.time()
    spec, dig = _read_spec(args.spec)
    _guard(spec, args.max_qubits)
    circ, desc = build_U_H(spec)
    _guard(spec, args.max_qubits, circ.n_qubits)
    rep = audit_spec(spec, circ, desc)
    man = RunManifest("build", dig, outputs={"gates": args.out, "report": args.report})
    man.wall_clock = time.time() - t0
    files = {}
    if args.out:
        files[args.out] = _gate_text(circ, dig)
    report = {"manifest": man.to_json(), "descriptor": _descriptor_json(circ, desc),
              "ledger": desc.extra.get("ledger"), "resources": rep.to_json()}
    if args.report:
        files[args.report] = _dump(report)
    _write_all(files)
    if not args.report:
        sys.stdout.write(_dump({"scale": desc.scale, "flag_qubits": desc.flag_qubits,
                                "n_qubits": circ.n_qubits}))
    return EXIT_OK


def cmd_verify(args) -> int:
    from .assembly import build_U_H
    from .circuit import parse_gates
    from .reference import build_hamiltonian_dense
    from .resources import audit_spec
    from .sim import LEAK_TOL, extract_block, pure_leak
    t0 = time.time()
    spec, dig = _read_spec(args.spec)
    _guard(spec, args.max_qubits)
    circ, desc = build_U_H(spec)
    if args.gates:
        with open(args.gates) as fh:
            circ = parse_gates(fh.read())
    _guard(spec, args.max_qubits, circ.n_qubits)
    H = build_hamiltonian_dense(spec)
    res = extract_block(circ, desc, check=False)
    diff = np.abs(res.block * desc.scale - H)
    i, j = np.unravel_index(int(np.argmax(diff)), diff.shape)
    dev = float(diff[i, j])
    op = float(np.linalg.norm(res.block * desc.scale - H, 2))
    leak = max(res.leak, pure_leak(circ))
    rep = audit_spec(spec, *build_U_H(spec))
    checks = {
        "block": {"ok": op <= args.tol, "norm2": op, "max_entry": dev, "worst_entry": [int(i), int(j)]},
        "purity": {"ok": leak <= LEAK_TOL, "leak": leak},
        "strict_bounds": {"ok": not rep.failed,
                          "failed": [e.name for e in rep.entries if e.status == "fail"]},
    }
    ok = all(c["ok"] for c in checks.values())
    worst = None if ok else next(k for k, c in checks.items() if not c["ok"])
    man = RunManifest("verify", dig, tolerances={"tol": args.tol, "leak": LEAK_TOL},
                      outputs={"report": args.report})
    man.wall_clock = time.time() - t0
    verdict = {"manifest": man.to_json(), "ok": ok, "worst_offender": worst, "checks": checks,
               "resources": rep.to_json()}
    text = _dump(verdict)
    if args.report:
        _write_all({args.report: text})
    sys.stdout.write(_dump({"ok": ok, "worst_offender": worst, "checks": checks}))
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_evolve(args) -> int:
    import scipy.linalg as sla
    from .evolution import build_evolution_be
    from .reference import build_hamiltonian_dense
    from .sim import extract_block
    t0 = time.time()
    spec, dig = _read_spec(args.spec)
    _guard(spec, args.max_qubits)
    circ, desc = build_evolution_be(spec, args.time, args.eps)
    _guard(spec, args.max_qubits, circ.n_qubits)
    H = build_hamiltonian_dense(spec)
    B = extract_block(circ, desc).block
    err = float(np.linalg.norm(sla.expm(1j * args.time * H) - desc.scale * B, 2))
    ok = err <= args.eps
    man = RunManifest("evolve", dig, tolerances={"eps": args.eps},
                      outputs={"gates": args.out, "report": args.report})
    man.wall_clock = time.time() - t0
    report = {"manifest": man.to_json(), "descriptor": _descriptor_json(circ, desc),
              "g": desc.extra.get("g"), "queries": desc.extra.get("queries"),
              "measured_error": err, "ok": ok}
    files = {}
    if args.out:
        files[args.out] = _gate_text(circ, dig)
    if args.report:
        files[args.report] = _dump(report)
    _write_all(files)
    sys.stdout.write(_dump({"g": report["g"], "queries": report["queries"], "measured_error": err, "ok": ok}))
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_count(args) -> int:
    from .assembly import build_U_H
    from .circuit import count_resources
    from .resources import audit_spec, loglog_slope
    from .spec_model import parse_spec, spec_to_document
    t0 = time.time()
    spec, dig = _read_spec(args.spec)
    files = {}
    out = {}
    if args.sweep:
        if spec.multimode:
            raise DomainError("--sweep applies to one-mode specs only")
        ns = [int(v) for v in args.sweep.split(",")]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "one_qubit", "cnot", "pure_ancillas", "n_qubits"])
        ones = []
        for n in ns:
            doc = spec_to_document(spec)
            doc["grid"]["n"] = n
            c, _ = build_U_H(parse_spec(doc))
            one, cx, pure = count_resources(c)
            ones.append(one)
            w.writerow([n, one, cx, pure, c.n_qubits])
        out["sweep"] = {"n": ns, "one_qubit": ones,
                        "loglog_slope": loglog_slope(ns, ones) if len(ns) > 1 else None}
        if args.csv:
            files[args.csv] = buf.getvalue()
        else:
            sys.stdout.write(buf.getvalue())
    else:
        rep = audit_spec(spec)
        out["resources"] = rep.to_json()
    man = RunManifest("count", dig, outputs={"report": args.report, "csv": args.csv})
    man.wall_clock = time.time() - t0
    out["manifest"] = man.to_json()
    if args.report:
        files[args.report] = _dump(out)
    _write_all(files)
    if not args.report and not args.sweep:
        sys.stdout.write(_dump(out))
    return EXIT_OK


def _params(pairs) -> dict:
    out = {}
    for p in pairs or []:
        if "=" not in p:
            raise SchemaError(f"--param expects key=value, got {p!r}")
        k, v = p.split("=", 1)
        try:
            out[k] = json.loads(v)
        except json.JSONDecodeError:
            out[k] = v
    return out


def _primitive(name: str, p: dict):
    from . import primitives as pr
    from . import qsvt
    from .reference import make_pattern
    from .spec_model import GridSpec, Polynomial

    def need(k):
        if k not in p:
            raise SchemaError(f"primitive {name!r} needs --param {k}=...")
        return p[k]

    if name == "adder":
        return pr.build_modular_adder(int(need("n"))), {}
    if name == "multicontrol":
        pat = str(need("pattern"))
        inner = pr.single_gate_circuit(p.get("gate", "x"), p.get("params", []))
        return pr.build_multicontrol(pat, inner), {}
    if name == "banded_access":
        n = int(need("n"))
        pat = make_pattern(n, list(need("offsets")), l=p.get("l"))
        return pr.build_banded_sparse_access(pat, n), {"l": pat.l}
    if name == "momentum_oracle":
        from .assembly import momentum_bands
        g = GridSpec(int(need("n")), float(p.get("a", -1.0)), float(p.get("b", 1.0)))
        bd = momentum_bands(g, int(need("m")))
        mo = pr.build_momentum_oracle(make_pattern(g.n, list(bd.offsets), list(bd.values)), None, bd.m)
        return mo.circuit, {"scale": mo.scale}
    if name == "binary_norm_prep":
        n, q = int(need("n")), int(need("q"))
        beta = np.asarray(need("beta"), dtype=float)
        ang = pr.solve_binary_norm_angles(beta, n, q, p.get("method", "ratio"))
        return pr.build_binary_norm_prep(ang, n, q), {"route": ang.route}
    if name == "state_prep":
        amps = [complex(*a) if isinstance(a, list) else complex(a) for a in need("amps")]
        return pr.build_state_prep(amps), {}
    if name == "x_oracle":
        g = GridSpec(int(need("n")), float(p.get("a", -1.0)), float(p.get("b", 1.0)))
        c, d = qsvt.build_x_amplitude_oracle(g)
        return c, d.to_json()
    if name == "polynomial_oracle":
        g = GridSpec(int(need("n")), float(p.get("a", -1.0)), float(p.get("b", 1.0)))
        po = qsvt.build_coordinate_polynomial_oracle(g, Polynomial(tuple(need("poly"))))
        return po.circuit, {**po.descriptor.to_json(), "phases": po.phases.to_json()}
    if name == "qsvt_phases":
        seq = qsvt.solve_qsvt_phases(Polynomial(tuple(need("poly"))))
        return None, seq.to_json()
    raise SchemaError(f"unknown primitive {name!r}")


PRIMITIVES = ("adder", "multicontrol", "banded_access", "momentum_oracle", "binary_norm_prep",
              "state_prep", "x_oracle", "polynomial_oracle", "qsvt_phases")


def cmd_primitive(args) -> int:
    from .circuit import count_resources
    circ, info = _primitive(args.name, _params(args.param))
    files = {}
    meta = {"primitive": args.name, "info": info}
    if circ is not None:
        meta["counts"] = list(count_resources(circ))
        text = _gate_text(circ, None)
        if args.out:
            files[args.out] = text
        else:
            sys.stdout.write(text)
    if args.report:
        files[args.report] = _dump(meta)
    _write_all(files)
    if circ is None and not args.report:
        sys.stdout.write(_dump(meta))
    return EXIT_OK


# -------------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hamforge", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, out=True):
        p.add_argument("spec")
        if out:
            p.add_argument("--out")
        p.add_argument("--report")
        p.add_argument("--max-qubits", type=int, default=22)

    p = sub.add_parser("build", help="emit U_H gate text and a JSON report")
    common(p)
    p.set_defaults(fn=cmd_build)
    p = sub.add_parser("verify", help="simulate U_H against the dense Hamiltonian")
    common(p, out=False)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--gates", help="verify this gate file instead of a fresh build")
    p.set_defaults(fn=cmd_verify)
    p = sub.add_parser("evolve", help="block-encode e^{itH} and measure its error")
    common(p)
    p.add_argument("--time", type=float, required=True)
    p.add_argument("--eps", type=float, default=1e-3)
    p.set_defaults(fn=cmd_evolve)
    p = sub.add_parser("count", help="resource audit, or a CSV sweep over n")
    p.add_argument("spec")
    p.add_argument("--report")
    p.add_argument("--sweep", help="comma-separated grid sizes, e.g. 3,4,5,6,7")
    p.add_argument("--csv")
    p.set_defaults(fn=cmd_count)
    p = sub.add_parser("primitive", help="export one primitive: " + ", ".join(PRIMITIVES))
    p.add_argument("name", choices=PRIMITIVES)
    p.add_argument("--param", action="append", metavar="KEY=VALUE")
    p.add_argument("--out")
    p.add_argument("--report")
    p.set_defaults(fn=cmd_primitive)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except HamforgeError as exc:
        print(f"construction error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_BUILD


if __name__ == "__main__":
    sys.exit(main())
