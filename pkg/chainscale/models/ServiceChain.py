from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable
from chainscale.models.VnfType import as_fraction


def prefix_products(gains: Iterable[Fraction]) -> tuple[Fraction, ...]:
    """Products of all gains strictly before each stage; the first is 1."""

    products = []
    running = Fraction(1)

    for gain in gains:
        products.append(running)
        running *= gain

    return tuple(products)


@dataclass(frozen=True)
class ServiceChain:
    """The ServiceChain class represents an ordered sequence of VNF stages.

    Attributes
    ----------
    id: int
        The chain's index, 1-based
    stages: tuple[int, ...]
        VNF type ids in traversal order, no type repeated
    gains: tuple[Fraction, ...]
        Per-stage gain/drop factor applied to traffic leaving the stage
    cum_gains: tuple[Fraction, ...]
        Per-stage factor converting the chain input rate into the rate
        arriving at the stage
    name: str
        Optional label
    """

    id: int
    stages: tuple[int, ...]
    gains: tuple[Fraction, ...]
    name: str = field(default="", compare=False)
    cum_gains: tuple[Fraction, ...] = field(init=False)

    def __post_init__(self):

        if not isinstance(self.id, int) or self.id < 1:
            raise ValueError("A chain id must be a positive integer.")

        stages = tuple(int(s) for s in self.stages)
        gains = tuple(as_fraction(g) for g in self.gains)

        if not stages:
            raise ValueError(f"Chain {self.id} must have at least one stage.")

        if len(set(stages)) != len(stages):
            raise ValueError(f"Chain {self.id} repeats a VNF type.")

        if len(gains) != len(stages):
            raise ValueError(f"Chain {self.id} needs exactly one gain per stage.")

        if any(g <= 0 for g in gains):
            raise ValueError(f"Chain {self.id} has a non-positive gain.")

        object.__setattr__(self, "stages", stages)
        object.__setattr__(self, "gains", gains)
        object.__setattr__(self, "cum_gains", prefix_products(gains))
        object.__setattr__(self, "name", self.name or "->".join(map(str, stages)))

    def __len__(self):
        return len(self.stages)

    def __str__(self):
        return f"{self.id} - {self.name}"

    def serialize(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "stages": list(self.stages),
            "gains": [str(g) for g in self.gains],
        }

    @classmethod
    def unserialize(cls, data: dict) -> "ServiceChain":

        try:
            gains: list[Any] = list(data["gains"])
            return cls(
                id=int(data["id"]), stages=tuple(data["stages"]),
                gains=tuple(gains), name=str(data.get("name", ""))
            )

        except KeyError as e:
            raise ValueError(f"Chain entry is missing the field {e.args[0]!r}.")
