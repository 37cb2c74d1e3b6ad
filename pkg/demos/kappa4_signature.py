"""The fourth cumulant is visible in x^2 statistics and invisible in traces.

For phi = x^2 on two overlapping sets the limiting covariance is
(4 + 2 kappa4) gamma_lp^2: Gaussian entries give 1/4, Rademacher entries
(kappa4 = -2) give exactly zero and uniform entries (kappa4 = -6/5) give 1/10.
"""
from subwigner.chebfn import builtin_function
from subwigner.ensemble import IndexSetSpec, make_entry_law, realize_index_family
from subwigner.theory import covariance_matrix

family = realize_index_family((IndexSetSpec.prefix(0.5), IndexSetSpec.window(0.25, 0.75)), 512)
x2 = builtin_function("x2")
for kind in ("gaussian", "rademacher", "uniform"):
    law = make_entry_law(kind, 2.0)
    cov, parts = covariance_matrix((x2, x2), family, law, return_breakdown=True)
    b = parts[0][1]
    print(f"{kind:>10}: kappa4 = {law.kappa4:+.3f}  Cov = {cov[0, 1]:.6f}  "
          f"(free field {b.gff_part:.4f}, sigma {b.sigma_part:.4f}, kappa4 {b.kappa4_part:+.4f})")
