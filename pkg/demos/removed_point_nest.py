"""Nest of odometer translations with shrinking excluded sets.

The orbit cocycle jumps at a removed point, yet restricting to small clopen
sets gives an AF relation."""

from vershik_lab import examples, nested
from vershik_lab.space import ClopenSet

N = examples.dh_nested()

for n in range(1, 5):
    print(f"phi_{n} excludes", examples.dh_excluded(n))

diag = nested.continuity_diagnostic(N)
for w in diag.witnesses:
    print(f"cell {w.cell} at level {w.level}: cocycle values {w.values} at {w.points}")

U = ClopenSet(N.space, [(1, 1, 1)])
V = ClopenSet(N.space, [(0, 0, 0)])
af = nested.check_afnest(N, U, V)
print(f"AF restriction found at level {af.level}: Y={af.Y} Z={af.Z}")
