"""The dyadic odometer three ways: as a Vershik map, as a Bratteli system,
and rebuilt from its Kakutani-Rohlin towers."""

from vershik_lab import examples, kr, pds, versik
from vershik_lab.space import ClopenSet


def show_successor(depth=4):
    B = examples.dyadic_diagram(depth)
    p = (0,) * depth
    print(f"orbit of {p} on the depth-{depth} dyadic diagram:")
    while p is not versik.NEED_DEEPER:
        print("  ", "".join(map(str, p)), "rank", versik.rank_in_fiber(B, p))
        p = versik.successor(B, p)
    print("  the all-ones path needs a deeper level\n")


def show_towers():
    S = examples.odometer_system(depth_bound=12)
    part = kr.build_towers(S, ClopenSet(S.space, [(0,)]))
    print("towers over [0]: heights", part.heights)
    chain = kr.default_chain(S, 8)
    B = kr.extract_diagram(kr.build_stages(S, 8, chain), S)
    print("extracted path counts:", [B.total_paths(n) for n in range(1, 9)])
    print("conjugacy up to level 8:", type(kr.verify_conjugacy(S, B, 8)).__name__)
    print("periodic cells up to depth 8:", pds.detect_periodic(S, depth=8))


if __name__ == "__main__":
    show_successor()
    show_towers()
