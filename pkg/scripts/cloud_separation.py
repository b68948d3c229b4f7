"""Tabulate the per-letter separation d_k, the threshold kappa * l_k, and the
cloud sizes for a spec file, depth by depth.

    python scripts/cloud_separation.py specs/triangular_five_letter.yaml [--k-max 8]
"""
import argparse

from finbisim.linalg import letter_gain, power_norm_sequence, transform_for
from finbisim.reachset import ForcedResponse, letter_distance_matrix
from finbisim.sysmodel import load_spec, with_options


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("spec")
    ap.add_argument("--k-max", type=int, default=8)
    args = ap.parse_args()
    sys, cfg = load_spec(args.spec)
    cfg = with_options(cfg, k_max=args.k_max)
    eps, _ = cfg.resolve_epsilon(sys.rho)
    st = transform_for(sys, eps)
    h = letter_gain(sys)
    norms = power_norm_sequence(sys.A, cfg.k_max)
    enum = ForcedResponse(sys, cfg.budget, track_words=False)
    print(f"rho={sys.rho:g} epsilon={eps:g} kappa={st.kappa:.6g} h={h:g}")
    print("k\tpoints\td_k\tkappa*l_k\tseparated")
    for k in range(1, cfg.k_max + 1):
        clouds = [enum.letter_block(k, j)[0] for j in range(sys.q)]
        d = float(letter_distance_matrix(clouds).min()) if sys.q > 1 else float("nan")
        thr = st.kappa * h * norms[k - 1]
        print(f"{k}\t{sum(map(len, clouds))}\t{d:.10g}\t{thr:.10g}\t{d >= thr and d > 0}")


if __name__ == "__main__":
    main()
