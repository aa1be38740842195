"""Sub-function index sets, reconstruction combinations and share accounting.

Node indexes are 1-based throughout, matching the ordering convention of
``core.order_indexes``. A sub-function set is a sorted tuple of M node
indexes; a combination is an ordered tuple of B pairwise-disjoint sets
covering [1:K]. Combinations are counted as ordered tuples, which is what
the product-of-binomials cardinality formula enumerates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

DEFAULT_ENUMERATION_CAP = 10**6


class EnumerationCapError(ValueError):
    """Raised when an enumeration would exceed the configured cap."""

    def __init__(self, what, count, cap):
        self.count = count
        self.cap = cap
        super().__init__(f"{what}: {count} elements exceed the cap of {cap}")


def count_subfunction_sets(k, m):
    """|S| = C(K, M): number of size-M subsets of [1:K]."""
    _check_km(k, m)
    return math.comb(k, m)


def count_combinations(k, m):
    """|Q| = prod_{l=0}^{B-1} C(K - M*l, M): ordered disjoint covers of [1:K]."""
    _check_km(k, m)
    if k % m:
        raise ValueError(f"m={m} must divide k={k} to partition the node set")
    b = k // m
    out = 1
    for l in range(b):
        out *= math.comb(k - m * l, m)
    return out


def enumerate_subfunction_sets(k, m, cap=DEFAULT_ENUMERATION_CAP):
    """All size-M subsets of [1:K] in lexicographic order."""
    count = count_subfunction_sets(k, m)
    if count > cap:
        raise EnumerationCapError("sub-function sets", count, cap)
    return list(combinations(range(1, k + 1), m))


def enumerate_combinations(k, m, cap=DEFAULT_ENUMERATION_CAP):
    """All ordered tuples of disjoint size-M sets covering [1:K]."""
    count = count_combinations(k, m)
    if count > cap:
        raise EnumerationCapError("reconstruction combinations", count, cap)

    def extend(remaining):
        if not remaining:
            return [()]
        out = []
        for part in combinations(remaining, m):
            rest = tuple(x for x in remaining if x not in part)
            out.extend((part,) + tail for tail in extend(rest))
        return out

    return extend(tuple(range(1, k + 1)))


def is_valid_partition(parts, k):
    """True iff parts are pairwise disjoint and their union is [1:K]."""
    seen = set()
    total = 0
    for part in parts:
        part = set(part)
        if part & seen:
            return False
        seen |= part
        total += len(part)
    return total == k and seen == set(range(1, k + 1))


@dataclass(frozen=True)
class SubcarrierShares:
    """Exact per-sub-function and per-combination sub-carrier shares."""

    per_subfunction: Fraction
    per_combination: Fraction


def expected_subcarrier_share(n, k, m):
    """Share of n sub-carrier slots per sub-function (n/|S|) and per
    (combination, sub-function) pair (n/(B*|Q|)), as exact rationals.

    A fractional share signals that n must be chosen divisible before any
    concrete slot schedule can honor the split.
    """
    if n <= 0:
        raise ValueError(f"total sub-carrier slots must be positive, got {n}")
    s = count_subfunction_sets(k, m)
    q = count_combinations(k, m)
    b = k // m
    return SubcarrierShares(
        per_subfunction=Fraction(n, s),
        per_combination=Fraction(n, b * q),
    )


def _check_km(k, m):
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    if not 1 <= m <= k:
        raise ValueError(f"m must satisfy 1 <= m <= k, got m={m}, k={k}")
