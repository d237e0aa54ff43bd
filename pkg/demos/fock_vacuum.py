"""Transformed vacua and implementers on a truncated Fock space.

For each relation element the vacuum Omega_g is the joint kernel of the
transformed annihilators. The demo prints its size, its overlap with the
reference vacuum, and how both settle as the mode budget grows.

Run: python demos/fock_vacuum.py
"""
from thompson_fock import RotationM, named_element
from thompson_fock.fock import FockVector, Implementer, check_car_relations, solve_vacuum

M = RotationM.hadamard()

rep = check_car_relations(10)
print(f"CAR on 10 modes: exact = {rep['car_exact']}, joint kernel dim = {rep['joint_kernel_dim']}")

print("\nname  core  sector dim  terms  |<Omega_g, Omega>|")
for name in "ABCDE":
    v = solve_vacuum(named_element(name), M, 14)
    ov = abs(v.vector.inner(FockVector.vacuum()))
    print(f"{name:4s}  {len(v.space.core):4d}  {v.sector_dim:10d}  {len(v.vector):5d}  {ov:.12f}")

# convergence in the mode budget (padding modes are fixed by u_g)
print("\nbudget  |<Omega_C, Omega>|   largest coefficient")
for n in (10, 12, 14, 16):
    v = solve_vacuum(named_element("C"), M, n).vector
    big = max(abs(c) for _, c in v.items())
    print(f"{n:6d}  {abs(v.inner(FockVector.vacuum())):.15f}  {big:.15f}")

U = Implementer(named_element("D"), M, 12)
print("\nU_D unitarity defect on labels with <= 2 modes:", f"{U.unitarity_defect():.2e}")
mode = U.space.modes[0]
res = U.intertwining_residual(mode, FockVector.vacuum(), "create")
print(f"intertwining residual for a({mode.label})^* on the vacuum: {res:.2e}")
