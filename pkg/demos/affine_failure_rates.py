"""Empirical serving success of the random affine-plane construction."""

from stbatch.affine import default_parameters, estimate_failure_rate

for q in (5, 7, 11, 13):
    for allow in (False, True):
        stats = estimate_failure_rate(q, 3, 1, code_samples=20, request_samples=50, seed=1, allow_systematic=allow)
        p1, p2 = default_parameters(3, q)
        mode = "with systematic" if allow else "strict"
        print(
            f"q={q:>2} p1={p1:.2f} p2={p2:.3f} {mode:>15}: success {stats.success_rate:.3f}, "
            f"mean redundancy {stats.mean_redundancy:.1f} (reference {stats.redundancy_reference:.0f})"
        )
