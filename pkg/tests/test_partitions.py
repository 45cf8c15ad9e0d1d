import itertools

import numpy as np
import pytest

from stbatch.model import RequestMultiset, replication_code, verify_batch_property, verify_plan
from stbatch.partitions import (
    FamilySearchExhausted,
    PartitionFamily,
    ServeFailure,
    VPartition,
    covers,
    random_complete_family,
    recursive_code,
    recursive_serve,
    verify_complete,
)


def family_of(n, u, parts_list):
    members = tuple(VPartition.from_parts(p, n) for p in parts_list)
    return PartitionFamily(n, u, members[0].v, members)


HALVES = [[0, 1], [2, 3]]
THREE_PAIRINGS = [HALVES, [[0, 2], [1, 3]], [[0, 3], [1, 2]]]


@pytest.mark.parametrize(
    "n, parts, subset, u, expected",
    [
        (4, HALVES, [0, 2], 1, True),
        (4, HALVES, [0, 1], 1, False),
        (8, [[0, 1, 2, 3], [4, 5, 6, 7]], [0, 1, 4, 5], 2, True),
    ],
)
def test_covers(n, parts, subset, u, expected):
    assert covers(VPartition.from_parts(parts, n), subset, u) is expected


def test_covers_rejects_wrong_size():
    with pytest.raises(ValueError):
        covers(VPartition.from_parts(HALVES, 4), [0], 1)


def test_partition_validation():
    with pytest.raises(ValueError):
        VPartition.from_parts([[0, 1], [1, 2]], 3)
    with pytest.raises(ValueError):
        VPartition.from_parts([[0], [1]], 3)
    p = VPartition((0, 0, 0), 2)
    assert p.parts == [[0, 1, 2], []]


def test_verify_complete_examples():
    assert verify_complete(family_of(4, 1, THREE_PAIRINGS)) == (True, None)
    assert verify_complete(family_of(4, 1, [HALVES])) == (False, (0, 1))
    assert verify_complete(PartitionFamily(4, 1, 2, ()))[0] is False
    assert verify_complete(family_of(4, 2, [[[0, 1], [2, 3]]]))[0] is True


def test_verify_complete_matches_brute_force():
    rng = np.random.default_rng(3)
    for _ in range(30):
        n = int(rng.integers(3, 7))
        members = tuple(VPartition(tuple(rng.integers(0, 2, size=n).tolist()), 2) for _ in range(int(rng.integers(1, 5))))
        fam = PartitionFamily(n, 1, 2, members)
        expected = all(any(covers(p, sub, 1) for p in members) for sub in itertools.combinations(range(n), 2))
        assert verify_complete(fam)[0] is expected


def test_family_text_round_trip():
    fam = family_of(4, 1, THREE_PAIRINGS)
    text = fam.to_text()
    assert text.splitlines()[0] == "1 1 2 2"
    assert PartitionFamily.from_text(text, 1, 2) == fam


def test_random_family_reproducible_and_complete():
    a = random_complete_family(6, 1, 2, seed=4)
    b = random_complete_family(6, 1, 2, seed=4)
    assert a == b
    assert verify_complete(a)[0]


def test_random_family_can_exhaust():
    with pytest.raises(FamilySearchExhausted):
        random_complete_family(10, 1, 2, seed=0, max_restarts=3, size=1)


def test_recursive_code_encoder_layout():
    fam = family_of(4, 1, [HALVES])
    code = recursive_code(fam, replication_code(3, 2))
    assert code.redundancy == 6
    # appended symbols are (x1, x2, 0, x3, x4, 0)
    assert code.columns[4:] == (1, 2, 0, 4, 8, 0)
    x = 0b1011
    expected_tail = [1, 1, 0, 0, 1, 0]
    word = code.encode(x)
    assert [(word >> (4 + k)) & 1 for k in range(6)] == expected_tail


def test_recursive_serve_uses_both_blocks():
    fam = family_of(4, 1, [HALVES])
    base = replication_code(3, 2)
    code = recursive_code(fam, base)
    req = RequestMultiset.index([(0, 1), (2, 1)])
    plan = recursive_serve(fam, base, req)
    assert verify_plan(code, req, plan)


def test_recursive_serve_pads_single_target():
    fam = family_of(4, 1, THREE_PAIRINGS)
    base = replication_code(3, 2)
    code = recursive_code(fam, base)
    req = RequestMultiset.index([(3, 2)])
    assert verify_plan(code, req, recursive_serve(fam, base, req))


def test_recursive_serve_reports_missing_cover():
    fam = family_of(4, 1, [HALVES])
    base = replication_code(3, 2)
    with pytest.raises(ServeFailure):
        recursive_serve(fam, base, RequestMultiset.index([(0, 1), (1, 1)]))


def test_recursive_code_rejects_wrong_base():
    fam = family_of(4, 1, [HALVES])
    with pytest.raises(ValueError):
        recursive_code(fam, replication_code(4, 2))
    lopsided = PartitionFamily(4, 1, 2, (VPartition((0, 0, 0, 0), 2),))
    with pytest.raises(ValueError):
        recursive_code(lopsided, replication_code(3, 2))


def test_composed_code_n6():
    fam = random_complete_family(6, 1, 2, seed=0)
    base = replication_code(5, 2)
    code = recursive_code(fam, base)
    assert code.redundancy == 2 * len(fam) * base.redundancy
    assert verify_batch_property(code, 2, 2, max_set_size=2).passed
    for a, b in itertools.combinations(range(6), 2):
        req = RequestMultiset.index([(a, 1), (b, 1)])
        assert verify_plan(code, req, recursive_serve(fam, base, req))
    for a in range(6):
        req = RequestMultiset.index([(a, 2)])
        assert verify_plan(code, req, recursive_serve(fam, base, req))
