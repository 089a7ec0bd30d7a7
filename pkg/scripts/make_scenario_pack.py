"""Write the bundled 12-scenario pack into scenarios/ (idempotent)."""
import json
import math
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "scenarios"

IID4 = {"kind": "iid", "p": [0.25, 0.25, 0.25, 0.25]}
D_PAIRS = [[1, 1], [1, 4], [4, 1], [4, 4]]  # d1, d2 independent on {1, 4}
CONST = {"kind": "iid", "p": [1.0]}

PACK = {
    "01_all_ones_iid": dict(A=[[1, 1], [1, 1]], driver=IID4, d_table=D_PAIRS,
                            defaults={"seed": 1, "n": 1_000_000}),
    "02_permutation_iid": dict(A=[[0, 1], [1, 0]], driver=IID4, d_table=D_PAIRS, defaults={"seed": 2}),
    "03_constant_primitive": dict(A=[[1, 2], [3, 1]], driver=CONST, d_table=[[2, 5]], defaults={"seed": 3}),
    "04_reducible_identity_d": dict(A=[[1, 1], [0, 1]], driver=CONST, d_table=[[1, 1]], defaults={"seed": 4}),
    "05_zero_dispersal": dict(A=[[0, 0], [0, 0]], driver={"kind": "iid", "p": [0.5, 0.5]},
                              d_table=[[1, 2], [3, 1]], defaults={"seed": 5}),
    "06_single_patch": dict(A=[[1]], driver={"kind": "iid", "p": [0.5, 0.5]}, d_table=[[1], [4]],
                            defaults={"seed": 6}),
    "07_markov_two_state": dict(A=[[0.6, 0.4], [0.3, 0.7]],
                                driver={"kind": "markov", "P": [[0.9, 0.1], [0.5, 0.5]]},
                                d_table=[[0.5, 2.0], [3.0, 0.8]], defaults={"seed": 7}),
    "08_rotation_golden": dict(A=[[0.8, 0.2], [0.3, 0.7]],
                               driver={"kind": "rotation", "alpha": (math.sqrt(5) - 1) / 2, "x0": 0.1,
                                       "cuts": [0.3, 0.7]},
                               d_table=[[0.5, 2.0], [1.5, 1.0], [3.0, 0.4]], defaults={"seed": 8}),
    "09_markov_positive_3x3": dict(A=[[0.5, 0.3, 0.2], [0.2, 0.6, 0.2], [0.1, 0.3, 0.6]],
                                   driver={"kind": "markov", "P": [[0.7, 0.2, 0.1], [0.3, 0.4, 0.3],
                                                                   [0.2, 0.2, 0.6]]},
                                   d_table=[[0.2, 1.0, 5.0], [2.0, 2.0, 0.5], [6.0, 0.3, 1.0]],
                                   defaults={"seed": 9}),
    "10_permutation_constant": dict(A=[[0, 1], [1, 0]], driver=CONST, d_table=[[1, 1]], defaults={"seed": 10}),
    "11_symmetric_iid": dict(A=[[1, 2], [2, 1]], driver=IID4, d_table=D_PAIRS, defaults={"seed": 11}),
    "12_four_cycle_iid": dict(A=[[0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1], [1, 0, 0, 0]],
                              driver={"kind": "iid", "p": [0.5, 0.5]},
                              d_table=[[0.5, 2.0, 1.0, 3.0], [4.0, 0.5, 2.0, 0.25]], defaults={"seed": 12}),
}


def main():
    OUT.mkdir(exist_ok=True)
    for name, body in PACK.items():
        (OUT / f"{name}.json").write_text(json.dumps({"name": name, **body}, indent=2) + "\n")
    print(f"wrote {len(PACK)} scenarios to {OUT}")


if __name__ == "__main__":
    main()
