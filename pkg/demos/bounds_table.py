"""Lower bounds next to the redundancy of the partition-based upper bound."""

from stbatch.qcalc import binary_factorization, lower_bound_redundancy, recursive_upper_bound

print(f"{'n':>4} {'s':>2} {'t':>3} {'lower':>10} {'source':>15} {'upper':>10}")
for n, s, t in [(16, 1, 2), (64, 1, 8), (100, 2, 6), (256, 4, 12), (1024, 8, 24)]:
    low = lower_bound_redundancy(n, s, t, include_trivial=True)
    factors = binary_factorization(s) if s > 1 else []
    up = recursive_upper_bound(n, t, factors, (t - 1) * n)
    print(f"{n:>4} {s:>2} {t:>3} {float(low.value):>10.3f} {low.source:>15} {up.value:>10}")
