"""Build a (2, 2)-batch code from a complete family of 2-partitions and a
replication base code, then serve every pair of indices."""

import itertools

from stbatch import RequestMultiset, replication_code, verify_batch_property, verify_plan
from stbatch.partitions import random_complete_family, recursive_code, recursive_serve

n = 6
family = random_complete_family(n, 1, 2, seed=0)
base = replication_code(n - 1, 2)
code = recursive_code(family, base)
print(f"family of {len(family)} partitions:")
print(family.to_text(), end="")
print(f"composed code: N={code.length}, redundancy={code.redundancy}")
for a, b in itertools.combinations(range(n), 2):
    req = RequestMultiset.index([(a, 1), (b, 1)])
    assert verify_plan(code, req, recursive_serve(family, base, req))
report = verify_batch_property(code, 2, 2, max_set_size=2)
print(f"(2, 2) property: {'PASS' if report.passed else 'FAIL'} over {report.checked} requests")
