"""Thompson's group F acting on L^2[0,1] through Haar-type modes.

Walks from the two generators to the relation elements C, D, E, prints a
small Koopman window, and shows that the off-diagonal part of each operator
is Hilbert-Schmidt with index zero.

Run: python demos/group_and_windows.py
"""
import numpy as np

from thompson_fock import (
    RotationM,
    fredholm_index,
    hs_norm_commutator,
    koopman_window,
    named_element,
    segal_distance,
    verify_relations,
)
from thompson_fock.haar import ModeIndex, simple_level
from thompson_fock.thompson import level, mil

M = RotationM.hadamard()

# group elements are breakpoint lists; products compose right to left
for name in "ABCDE":
    g = named_element(name)
    print(f"{name}: level {level(g)}, mil {mil(g)}, breakpoints {len(g.breakpoints)}")

for rel in verify_relations():
    print(f"{rel['relation']}: identity = {rel['identity']}")

# u_A on modes of level <= 4; beyond level 5 every mode moves to a single mode
win = koopman_window(named_element("A"), M, 4)
labels = [ModeIndex.from_index(i).label for i in range(16)]
dense = win.to_dense().real
np.set_printoptions(precision=3, suppress=True, linewidth=140)
print("\nu_A window (rows/cols):", " ".join(labels))
print(dense)
print("exact column orthonormality:", win.check_orthonormal())
print("simple level of A:", simple_level(named_element("A")))

# ||[u, P]||_2 two ways, exactly in Z[sqrt2]
print("\nname  ||[u,P]||_2^2 (exact)          Segal route equal   index")
for name in "ABCDE":
    g = named_element(name)
    hs = hs_norm_commutator(g, M, 10)
    seg = segal_distance(g, M, 10)
    idx = fredholm_index(g, M, 10)
    print(f"{name:4s}  {str(hs.exact_sq):30s}  {seg.exact_sq == hs.exact_sq!s:18s}  {idx.index}")

# away from the Hadamard basis the same quantities run on the float path
print("\nangle  ||[u_C,P]||_2")
for th in (0.0, 30.0, 45.0, 60.0, 90.0):
    print(f"{th:5.1f}  {hs_norm_commutator(named_element('C'), RotationM.rotation(th), 10).value:.12f}")
