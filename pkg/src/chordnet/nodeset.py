"""Canonical node sets.

A NodeSet is an ascending tuple of distinct variable indices. Bitmask
conversions are used where set algebra dominates (encoder, oracle).
"""

from itertools import combinations
from typing import Iterable, Iterator, Optional, Sequence, Tuple

NodeSet = Tuple[int, ...]

MAX_VARIABLES = 30


def to_mask(members: Iterable[int]) -> int:
    mask = 0
    for i in members:
        mask |= 1 << i
    return mask


def from_mask(mask: int) -> NodeSet:
    members = []
    i = 0
    while mask:
        if mask & 1:
            members.append(i)
        mask >>= 1
        i += 1
    return tuple(members)


def canonical_key(s: NodeSet) -> Tuple[int, NodeSet]:
    """Sort key: by size, then lexicographically."""
    return (len(s), s)


def sorted_nodesets(sets: Iterable[NodeSet]) -> Tuple[NodeSet, ...]:
    return tuple(sorted(sets, key=canonical_key))


def all_subsets(n: int, max_size: Optional[int] = None) -> Iterator[NodeSet]:
    """Every nonempty subset of range(n) up to ``max_size``, in canonical order."""
    cap = n if max_size is None else min(max_size, n)
    for k in range(1, cap + 1):
        yield from combinations(range(n), k)


def intersection(a: Sequence[int], b: Sequence[int]) -> NodeSet:
    return tuple(sorted(set(a) & set(b)))


def is_strict_subset(a: Sequence[int], b: Sequence[int]) -> bool:
    return len(a) < len(b) and set(a) <= set(b)


def format_nodeset(s: NodeSet) -> str:
    return "{" + ",".join(str(i) for i in s) + "}"
