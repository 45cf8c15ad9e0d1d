"""Serve functional requests on small simplex codes and show which route
each one takes."""

from stbatch import RequestMultiset, simplex_code, verify_plan
from stbatch.simplex import serve_functional_routed

REQUESTS = [
    (3, [(0b001, 4)]),
    (3, [(0b001, 2), (0b010, 2)]),
    (4, [(0b0011, 3), (0b0101, 2), (0b0110, 2), (0b1000, 1)]),
    (5, [(0b00011, 9), (0b10101, 5)]),
    (6, [(1, 8), (2, 8), (4, 8)]),
]

for n, entries in REQUESTS:
    code = simplex_code(n)
    req = RequestMultiset.vectors(entries)
    result = serve_functional_routed(n, req)
    ok = verify_plan(code, req, result.plan)
    print(f"n={n} request={[(format(v, 'x'), a) for v, a in entries]} route={result.route} valid={bool(ok)}")
    for target, sets in result.plan.groups:
        shown = [sorted(format(code.columns[c], "x") for c in s) for s in sets]
        print(f"  {target:x}: {shown}")
