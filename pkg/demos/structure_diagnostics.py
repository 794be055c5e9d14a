"""How structured is each family? Coherence graphs, chromatic numbers, coherence.

Run: python3 demos/structure_diagnostics.py
"""

import structembed as se

# The circulant coherence graph for adjacent rows at n=5 is a 5-cycle.
M = se.build("circulant", 2, 5, seed=1)
G = se.coherence_graph(M, 0, 1)
print("circulant n=5 rows (0,1): vertices", G.vertices)
print("  greedy colors:", se.greedy_coloring(G)[1], " exact chromatic number:", se.exact_chromatic(G))
print()

print(f"{'family':<16}{'chi':>5}{'exact':>7}{'mu':>10}{'mu_tilde':>10}{'normalized':>12}{'orthogonal':>12}")
for family in ("circulant", "skew_circulant", "toeplitz", "hankel", "unstructured"):
    M = se.build(family, 8, 16, seed=3)
    s = se.model_stats(M, exact=True)
    print(f"{family:<16}{s.chi:>5}{str(s.chi_is_exact):>7}{s.mu:>10.4f}{s.mu_tilde:>10.4f}"
          f"{str(se.check_normalized(M)):>12}{str(se.check_orthogonality(M)):>12}")

ldr = se.build(se.StructuredFamily("ldr", r=2, a=4), 8, 16, seed=3)
s = se.model_stats(ldr, exact=True)
print(f"{'ldr (r=2, a=4)':<16}{s.chi:>5}{str(s.chi_is_exact):>7}{s.mu:>10.4f}{s.mu_tilde:>10.4f}"
      f"{str(se.check_normalized(ldr, tol=1e-12)):>12}{str(se.check_orthogonality(ldr, tol=1e-9)):>12}")
