"""
Two certificate forms and their size gap
========================================

Robust feasibility over the consistency set can be certified two ways:
a direct positivity certificate in the plant AND noise variables
jointly, or an eliminated form whose multipliers absorb the noise
variables and leave a program over the plant coefficients only.  Both
certify the same inequalities; the eliminated form trades many tiny
blocks for the one huge Gram matrix of the direct form.
"""

from eivstab.arx import ArxModel
from eivstab.data import generate
from eivstab.synth import psatz_sizes, synth_alternatives, synth_full

# size accounting for the benchmark point n_a = 3, n_b = 2, T = 10
rep = psatz_sizes(3, 2, 10)
print(f"n_a=3, n_b=2, T=10: {rep.n_full_vars} joint variables"
      f" vs {rep.n_plant_vars} plant variables")
print("direct form (d = 2):")
for name, bc in rep.full.items():
    print(f"  {name:<11} {bc.count:>3} blocks of gram dim {bc.dim}")
print("eliminated form (d = 1):")
for name, bc in rep.alternatives.items():
    print(f"  {name:<11} {bc.count:>3} blocks of gram dim {bc.dim}")

# the 465-dimensional Gram block is why the direct form only runs on tiny
# instances; on those, both forms agree to solver precision
plant = ArxModel(a=[0.3, -0.2], b=[0.5])
data = generate(plant, T=2, eps_u=0.05, eps_y=0.05, seed=30)
print("\ntiny instance n_a=2, n_b=1, T=2 at matched order d = 2:")
alt = synth_alternatives(data, ctrl_na=1, ctrl_nb=1, d=2)
print(f"  eliminated: gamma* = {alt.gamma:.8f}  ({alt.solve_seconds:.1f}s)")
full = synth_full(data, ctrl_na=1, ctrl_nb=1, d=2)
print(f"  direct:     gamma* = {full.gamma:.8f}  ({full.solve_seconds:.1f}s)")
print(f"  difference: {abs(alt.gamma - full.gamma):.2e}")

# raising the relaxation order tightens the eliminated form monotonically
for d in (1, 2, 3):
    r = synth_alternatives(data, ctrl_na=1, ctrl_nb=1, d=d)
    print(f"  order d = {d}: gamma* = {r.gamma:.8f}")
