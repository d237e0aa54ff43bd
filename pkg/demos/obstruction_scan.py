"""The obstruction pair Psi(M) = (alpha_M, beta_M) over rotations M.

alpha_M and beta_M are the scalar commutators of the implementers of
(C, D) and (C, E). They are computed directly on Fock space and, for
comparison, from principal logarithms of truncated windows. A verdict is
reported with its margins; it is a statement about the truncation only.

Run: python demos/obstruction_scan.py [--out psi.csv]
"""
import argparse

from thompson_fock import RotationM
from thompson_fock.lifting import lifting_report, psi, psi_scan, scan_csv

ap = argparse.ArgumentParser()
ap.add_argument("--out", default=None)
ap.add_argument("--modes", type=int, default=14)
args = ap.parse_args()

p = psi(RotationM.hadamard(), args.modes, cross_check=True, log_level=10)
d = p.to_dict()
print(f"Hadamard: alpha = {p.alpha:.12f}, beta = {p.beta:.12f}")
print(f"one-param: alpha = {p.cross_check.alpha:.12f}, beta = {p.cross_check.beta:.12f}")
print(f"pipeline difference {d['pipeline_difference']:.2e}")
for note in p.cross_check.notes:
    print("  note:", note)

rows = psi_scan([360.0 * k / 8 for k in range(8)], args.modes)
print("\ntheta   alpha                beta")
for th, pair, err in rows:
    if pair is None:
        print(f"{th:5.1f}   error: {err}")
    else:
        print(f"{th:5.1f}   {pair.alpha:.6f}   {pair.beta:.6f}")

v = lifting_report(RotationM.hadamard(), args.modes)
print("\nverdict at truncation:", v.verdict)
print("margins:", v.margins)

if args.out:
    with open(args.out, "w") as fh:
        fh.write(scan_csv(rows))
    print("wrote", args.out)
