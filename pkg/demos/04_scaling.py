"""Gate counts of U_H across grid sizes next to the closed-form bounds."""
from hamforge import simple_spec
from hamforge.assembly import build_U_H
from hamforge.circuit import count_resources
from hamforge.resources import audit_spec, evaluate_bound, loglog_slope

ns = list(range(3, 8))
ones = []
for n in ns:
    circ, desc = build_U_H(simple_spec(n, [(1.0, [0, 0.9], 1)]))
    one, cx, pure = count_resources(circ)
    ones.append(one)
    bound = evaluate_bound("U_H", n=n, q=1, gamma=0, lmax=1, l=desc.extra["l"])
    print(f"n={n}: one-qubit {one:>7} cx {cx:>7} pure {pure:>2}   bound {bound[0]:>9.0f} {bound[1]:>9.0f}")
print(f"log-log slope of one-qubit counts: {loglog_slope(ns, ones):.3f}")

rep = audit_spec(simple_spec(3, [(1.0, [0, 0.9], 1)]))
for e in rep.entries:
    print(f"  {e.name:<30} {e.status:<8} actual {e.actual} bound {tuple(round(b) for b in e.bound[:2])}")
