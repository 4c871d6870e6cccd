from dataclasses import dataclass
from fractions import Fraction
from chainscale.models.VnfType import as_fraction


@dataclass(frozen=True)
class Cluster:
    """Homogeneous servers, each with the same capacity vector.

    Attributes
    ----------
    num_servers: int
        Number of servers U
    capacity: tuple[Fraction, ...]
        Capacity of each resource on one server
    """

    num_servers: int
    capacity: tuple[Fraction, ...]

    def __post_init__(self):

        if not isinstance(self.num_servers, int) or self.num_servers < 0:
            raise ValueError("The number of servers must be a non-negative integer.")

        capacity = tuple(as_fraction(c) for c in self.capacity)

        if not capacity:
            raise ValueError("The server capacity must have at least one resource.")

        if any(c <= 0 for c in capacity):
            raise ValueError("Every server resource capacity must be positive.")

        object.__setattr__(self, "capacity", capacity)

    @property
    def num_resources(self) -> int:
        return len(self.capacity)

    def serialize(self) -> dict:
        return {
            "num_servers": self.num_servers,
            "capacity": [str(c) for c in self.capacity],
        }

    @classmethod
    def unserialize(cls, data: dict) -> "Cluster":

        try:
            return cls(
                num_servers=int(data["num_servers"]),
                capacity=tuple(data["capacity"])
            )

        except KeyError as e:
            raise ValueError(f"Cluster entry is missing the field {e.args[0]!r}.")
