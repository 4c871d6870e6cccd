from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator
import numpy as np
from chainscale.models.Placement import DemandVector, Placement


@dataclass(frozen=True, order=True)
class Pattern:
    """A feasible set of instances on one server.

    Ordering is lexicographic on ``counts``.

    Attributes
    ----------
    counts: tuple[int, ...]
        Instances of each VNF type, index i is type i + 1
    load: tuple[Fraction, ...]
        Resources the pattern consumes on its server
    """

    counts: tuple[int, ...]
    load: tuple[Fraction, ...] = ()

    def __post_init__(self):

        counts = tuple(int(c) for c in self.counts)

        if any(c < 0 for c in counts):
            raise ValueError("A pattern cannot hold a negative instance count.")

        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "load", tuple(Fraction(v) for v in self.load))

    @property
    def is_empty(self) -> bool:
        return not any(self.counts)

    def __str__(self):
        return "(" + ",".join(map(str, self.counts)) + ")"


@dataclass(frozen=True)
class Packing:
    """Patterns and the number of servers each one is applied to.

    Attributes
    ----------
    assignments: tuple[tuple[Pattern, int], ...]
        (pattern, multiplicity) pairs in the order the search chose them

    Methods
    -------
    servers
        Number of servers used
    totals()
        Instances of every type provided by the packing
    expand(num_servers)
        One pattern per server, padded with empty patterns
    to_placement(num_servers)
        The packing laid onto servers in expansion order
    """

    assignments: tuple[tuple[Pattern, int], ...] = ()
    num_types: int = 0

    def __post_init__(self):

        for pattern, multiplicity in self.assignments:

            if multiplicity < 1:
                raise ValueError("A pattern multiplicity must be positive.")

            if len(pattern.counts) != self.num_types:
                raise ValueError("Every pattern must cover all VNF types.")

    def __iter__(self) -> Iterator[tuple[Pattern, int]]:
        return iter(self.assignments)

    def __len__(self):
        return len(self.assignments)

    @property
    def servers(self) -> int:
        return sum(multiplicity for _, multiplicity in self.assignments)

    def totals(self) -> DemandVector:
        totals = np.zeros(self.num_types, dtype=np.int64)

        for pattern, multiplicity in self.assignments:
            totals += multiplicity * np.asarray(pattern.counts, dtype=np.int64)

        return totals

    def covers(self, n: DemandVector) -> bool:
        return bool(np.all(self.totals() >= np.asarray(n)))

    def expand(self, num_servers: int) -> list[Pattern]:

        if self.servers > num_servers:
            raise ValueError(
                f"The packing uses {self.servers} servers, only {num_servers} exist."
            )

        expanded = [pattern for pattern, multiplicity in self.assignments for _ in range(multiplicity)]
        empty = Pattern(counts=(0,) * self.num_types)
        expanded.extend([empty] * (num_servers - len(expanded)))

        return expanded

    def to_placement(self, num_servers: int) -> Placement:
        rows = [pattern.counts for pattern in self.expand(num_servers)]
        return Placement.from_rows(rows, self.num_types)

    def serialize(self) -> list[dict]:
        return [
            {"pattern": list(pattern.counts), "multiplicity": multiplicity}
            for pattern, multiplicity in self.assignments
        ]
