"""Refine the five-letter plant into 5, 25 and 125 classes and report how the
class diameters shrink.

    python scripts/many_classes_demo.py [--out DIR]
"""
import argparse
import os

from finbisim.artifact import dumps, geometry_dict, save_fub
from finbisim.bisim import algorithm2, diameter_bound, estimated_diameter
from finbisim.dfm import build_dfm
from finbisim.fixtures import triangular_five_letter
from finbisim.sysmodel import RunConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", help="write fub and geometry files per z here")
    args = ap.parse_args()
    sys = triangular_five_letter()
    print("z\tclasses\teta\tk\td\tkappa*l\tmax_diam\tbound")
    for z in (4, 24, 124):
        fub = algorithm2(sys, RunConfig(z=z))
        p = fub.provenance
        diam = max(estimated_diameter(fub, c) for c in fub.class_ids)
        build_dfm(fub)  # fails loudly if the quotient machine is not well defined
        print(f"{z}\t{len(fub)}\t{p.eta}\t{p.k_tilde}\t{p.d:g}\t{p.kappa * p.l_k_tilde:.4g}"
              f"\t{diam:.4g}\t{diameter_bound(fub):.4g}")
        if args.out:
            os.makedirs(args.out, exist_ok=True)
            save_fub(fub, os.path.join(args.out, f"fub_z{z}.json"))
            with open(os.path.join(args.out, f"geometry_z{z}.json"), "w", encoding="utf-8") as fh:
                fh.write(dumps(geometry_dict(fub)))


if __name__ == "__main__":
    main()
