"""Freeze brute-force forced-response clouds of the four-letter diagonal plant.

Every input tuple is enumerated and evaluated as sum_t A^t B u_t (no
recursion, numpy only), so the file is an oracle independent of finbisim.
All values are dyadic rationals, hence exact in double precision.

    python scripts/record_cantor_fixture.py [tests/data/cantor_clouds.json]
"""
import json
import sys

import numpy as np

LETTERS = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, -1.0], [0.0, 0.0]])
MATRICES = {"printed": np.diag([0.5, 0.0]), "swapped": np.diag([0.0, 0.5])}
DEPTHS = {"printed": [10], "swapped": [10, 11]}


def brute_force(A, k):
    q = len(LETTERS)
    digits = (np.arange(q ** k)[:, None] // q ** np.arange(k)[::-1]) % q  # lexicographic
    P = np.zeros((q ** k, 2))
    for t in range(k):
        P += (LETTERS @ np.linalg.matrix_power(A, t).T)[digits[:, t]]
    return np.unique(P + 0.0, axis=0)


def main(path="tests/data/cantor_clouds.json"):
    doc = {"format": "finbisim-cantor-oracle/1", "letters": LETTERS.tolist(), "clouds": {}}
    for name, A in MATRICES.items():
        for k in DEPTHS[name]:
            P = brute_force(A, k)
            doc["clouds"][f"{name}/{k}"] = {"A": A.tolist(), "depth": k, "points": P.tolist()}
            print(f"{name} depth {k}: {len(P)} distinct points")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


if __name__ == "__main__":
    main(*sys.argv[1:])
