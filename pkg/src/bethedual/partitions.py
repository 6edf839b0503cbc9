"""Integer partitions and the degree sets attached to them."""

from __future__ import annotations

from typing import Iterable


class Partition(tuple):
    """Weakly decreasing tuple of positive integers; ``()`` is the zero partition."""

    def __new__(cls, parts: Iterable[int] = ()):
        p = [int(x) for x in parts]
        while p and p[-1] == 0:
            p.pop()
        if any(x < 0 for x in p) or any(p[i] < p[i + 1] for i in range(len(p) - 1)):
            raise ValueError(f"not a partition: {p}")
        return super().__new__(cls, p)

    def part(self, i: int) -> int:
        """1-based part, zero past the end."""
        return self[i - 1] if 1 <= i <= len(self) else 0

    @property
    def size(self) -> int:
        return sum(self)

    @property
    def first(self) -> int:
        return self[0] if self else 0

    @property
    def length(self) -> int:
        return len(self)

    def conjugate(self) -> "Partition":
        return Partition(sum(1 for x in self if x >= i) for i in range(1, self.first + 1))

    def __repr__(self):
        return f"Partition({list(self)})"


def conjugate_partition(p: Partition) -> Partition:
    return Partition(p).conjugate()


def d_sets(mu: Partition) -> tuple[list[int], list[int]]:
    """Degree set ``d`` of a rate block and its complement in ``0..p-1``.

    ``d = {n + mu_j - j}`` with ``n`` the number of parts and ``p = mu_1 + n``.
    The complement is also computed from the conjugate partition and the two
    answers must agree.
    """
    mu = Partition(mu)
    n = mu.length
    p = mu.first + n
    d = {n + mu.part(j) - j for j in range(1, n + 1)}
    comp = set(range(p)) - d
    conj = mu.conjugate()
    other = {n - conj.part(j) + j - 1 for j in range(1, mu.first + 1)}
    if comp != other:
        raise AssertionError(f"complement formulas disagree for {mu}: {comp} vs {other}")
    return sorted(d, reverse=True), sorted(comp)
