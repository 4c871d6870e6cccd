from dataclasses import dataclass, field
from fractions import Fraction
from math import floor
from typing import Any, Sequence


def as_fraction(value: Any) -> Fraction:
    """Convert a config number to an exact Fraction through its decimal text.

    Floats go through ``repr`` so that ``0.9`` becomes ``9/10`` rather than
    the nearest binary double.
    """

    if isinstance(value, Fraction):
        return value

    if isinstance(value, bool):
        raise ValueError("A boolean is not a number.")

    if isinstance(value, int):
        return Fraction(value)

    if isinstance(value, float):
        return Fraction(repr(value))

    if isinstance(value, str):
        return Fraction(value.strip())

    raise ValueError(f"Cannot read {value!r} as a number.")


@dataclass(frozen=True)
class VnfType:
    """The VnfType class represents one class of virtualized network function.

    Attributes
    ----------
    id: int
        The type's index, 1-based and contiguous within a scenario
    name: str
        A human readable name (firewall, IDS, ...)
    demand: tuple[Fraction, ...]
        Units of each resource one instance consumes
    capacity_mbps: Fraction
        The maximum traffic rate one instance processes
    op_cost: Fraction
        Cost of keeping one instance on a server for one slot
    deploy_cost: Fraction
        Cost of launching one new instance

    Methods
    -------
    delta
        The ski-rental break-even horizon, max(1, floor(deploy_cost / op_cost))
    serialize()
        Returns a dictionary representation of the type
    unserialize(data: dict)
        Builds a type from its dictionary representation
    """

    id: int
    demand: tuple[Fraction, ...]
    capacity_mbps: Fraction
    op_cost: Fraction
    deploy_cost: Fraction
    name: str = field(default="", compare=False)

    def __post_init__(self):

        if not isinstance(self.id, int) or self.id < 1:
            raise ValueError("A VNF type id must be a positive integer.")

        demand = tuple(as_fraction(d) for d in self.demand)

        if not demand:
            raise ValueError(f"VNF type {self.id} must declare a resource demand.")

        if any(d < 0 for d in demand):
            raise ValueError(f"VNF type {self.id} has a negative resource demand.")

        if all(d == 0 for d in demand):
            raise ValueError(f"VNF type {self.id} must demand some resource.")

        capacity = as_fraction(self.capacity_mbps)
        op_cost = as_fraction(self.op_cost)
        deploy_cost = as_fraction(self.deploy_cost)

        if capacity <= 0:
            raise ValueError(f"VNF type {self.id} must have a positive capacity.")

        if op_cost <= 0:
            raise ValueError(f"VNF type {self.id} must have a positive operational cost.")

        if deploy_cost < 0:
            raise ValueError(f"VNF type {self.id} cannot have a negative deployment cost.")

        object.__setattr__(self, "demand", demand)
        object.__setattr__(self, "capacity_mbps", capacity)
        object.__setattr__(self, "op_cost", op_cost)
        object.__setattr__(self, "deploy_cost", deploy_cost)
        object.__setattr__(self, "name", self.name or f"vnf{self.id}")

    def __str__(self):
        return f"{self.id} - {self.name}"

    @property
    def delta(self) -> int:
        return max(1, floor(self.deploy_cost / self.op_cost))

    def with_costs(self, op_cost: Any, deploy_cost: Any) -> "VnfType":
        return VnfType(
            id=self.id, name=self.name, demand=self.demand,
            capacity_mbps=self.capacity_mbps, op_cost=op_cost,
            deploy_cost=deploy_cost
        )

    def serialize(self) -> dict:
        """Returns a dictionary representation of the type.

        Returns
        -------
        dict
            Exact values are written as decimal or fraction strings
        """

        return {
            "id": self.id,
            "name": self.name,
            "demand": [str(d) for d in self.demand],
            "capacity_mbps": str(self.capacity_mbps),
            "op_cost": str(self.op_cost),
            "deploy_cost": str(self.deploy_cost),
        }

    @classmethod
    def unserialize(cls, data: dict) -> "VnfType":
        """Builds a type from the ``vnf_types`` entry of a scenario file.

        Parameters
        ----------
        data: dict
            Mapping with id, name, demand, capacity_mbps, op_cost, deploy_cost

        Returns
        -------
        VnfType
            The validated type
        """

        try:
            demand: Sequence[Any] = data["demand"]
            return cls(
                id=int(data["id"]), name=str(data.get("name", "")),
                demand=tuple(demand), capacity_mbps=data["capacity_mbps"],
                op_cost=data["op_cost"], deploy_cost=data["deploy_cost"]
            )

        except KeyError as e:
            raise ValueError(f"VNF type entry is missing the field {e.args[0]!r}.")
