"""A space with two sequences converging to two distinct limits.

The nest built from two interleaved maps fails semi-saturation, but its
orbit relation matches the one generated by powers of a single map."""

from vershik_lab import examples, nested, pds

N1 = examples.nonsemisat_nested(horizon=16, depth_bound=14)
got = nested.semisaturation_check(N1)
print(f"semi-saturation fails at cell {got.cell}: images split into {got.image_cells}")

S = examples.nonsemisat_bratteli(depth_bound=14)
N2 = nested.NestedSequence(S.space, {1: S.phi}, rule="power", horizon=28, name="psi-powers")
points = [examples.ns_point(S.space, m, i) for m in range(8) for i in (1, 2)]
same, bad = nested.relation_mismatch(N1, N2, points, 20, 10)
print("same relation on sampled points:", same, "differing levels:", bad)

rep = pds.axiom_equivalence_probe(S, levels=(1, 2, 3), samples=8)
print("axiom probe samples:", rep.count(), "disagreements:", len(rep.disagreements))
