from collections import Counter
from dataclasses import dataclass, field
from chainscale.errors import PreplanExceededError
from chainscale.models.Placement import Placement


class ServerMultiset:
    """Server IDs still available for new instances of one VNF type.

    Server IDs are 0-based row indices of the placement. The multiset is a
    stack: ``eject`` pops the most recently inserted IDs, ``insert`` pushes.
    Every state is a sub-multiset of the initial one.

    Attributes
    ----------
    type_id: int
        The VNF type the multiset belongs to
    initial: Counter
        Multiplicity of every server ID in the MAX placement
    """

    def __init__(self, type_id: int, server_ids: list[int]):
        self.type_id = type_id
        self.initial = Counter(server_ids)
        self._stack = list(server_ids)
        self._held = Counter(server_ids)

    def __len__(self):
        return len(self._stack)

    def __repr__(self):
        return f"{self.__class__.__name__}(type_id={self.type_id}, size={len(self)})"

    def as_counter(self) -> Counter:
        return Counter(self._held)

    def eject(self, k: int) -> list[int]:

        if k < 0:
            raise ValueError("Cannot eject a negative number of server IDs.")

        if k > len(self._stack):
            raise PreplanExceededError(
                f"Demand exceeds pre-planned maximum: VNF type {self.type_id} needs "
                f"{k} more instances, only {len(self._stack)} planned slots remain."
            )

        if k == 0:
            return []

        ejected = self._stack[-k:][::-1]
        del self._stack[-k:]
        self._held.subtract(ejected)

        return ejected

    def insert(self, ids: list[int]) -> None:

        for server_id in ids:

            if self._held[server_id] >= self.initial[server_id]:
                raise ValueError(
                    f"Server {server_id} would hold more VNF type {self.type_id} "
                    f"instances than the MAX placement allows."
                )

            self._held[server_id] += 1
            self._stack.append(server_id)

    def serialize(self) -> list[int]:
        return list(self._stack)


@dataclass
class PrePlan:
    """Maximum supportable rate of one chain and its MAX placement.

    Attributes
    ----------
    alpha_max: int
        Largest input rate (Mbps) whose demand packs into the cluster
    max_placement: Placement
        The packing for alpha_max laid out on the servers (x^max)
    multisets: dict[int, ServerMultiset]
        Per VNF type id, the server IDs of its MAX instances
    saturated: bool
        True when the search bound itself was feasible

    Methods
    -------
    fresh()
        Copy whose multisets are back at their initial state
    serialize()
        JSON representation, cacheable between runs
    unserialize(data)
        Rebuilds a plan from its JSON representation
    """

    alpha_max: int
    max_placement: Placement
    multisets: dict[int, ServerMultiset] = field(default_factory=dict)
    saturated: bool = False
    rate_unit: int = 1

    @classmethod
    def from_placement(
            cls, alpha_max: int, placement: Placement, type_ids: list[int],
            saturated: bool = False, rate_unit: int = 1
    ) -> "PrePlan":
        """Build S_i from x^max: server u appears x^max_ui times, ascending."""

        multisets = {}

        for type_id in type_ids:
            column = placement.matrix[:, type_id - 1]
            ids = [u for u in range(placement.num_servers) for _ in range(int(column[u]))]
            multisets[type_id] = ServerMultiset(type_id, ids)

        return cls(
            alpha_max=alpha_max, max_placement=placement, multisets=multisets,
            saturated=saturated, rate_unit=rate_unit
        )

    def fresh(self) -> "PrePlan":
        return PrePlan.from_placement(
            self.alpha_max, self.max_placement, sorted(self.multisets),
            saturated=self.saturated, rate_unit=self.rate_unit
        )

    def serialize(self) -> dict:
        return {
            "alpha_max": self.alpha_max,
            "rate_unit": self.rate_unit,
            "saturated": self.saturated,
            "num_types": self.max_placement.num_types,
            "max_placement": self.max_placement.serialize(),
            "multisets": {str(k): v.serialize() for k, v in self.multisets.items()},
        }

    @classmethod
    def unserialize(cls, data: dict) -> "PrePlan":

        try:
            matrix = data["max_placement"]
            num_types = int(data["num_types"])
            placement = Placement.from_rows(matrix, num_types)
            plan = cls.from_placement(
                int(data["alpha_max"]), placement,
                sorted(int(k) for k in data["multisets"]),
                saturated=bool(data.get("saturated", False)),
                rate_unit=int(data.get("rate_unit", 1))
            )

        except (KeyError, IndexError, TypeError) as e:
            raise ValueError(f"The cached pre-plan is malformed: {e}") from e

        for type_id, ids in data["multisets"].items():

            if sorted(ids) != sorted(plan.multisets[int(type_id)].serialize()):
                raise ValueError(
                    f"The cached multiset of VNF type {type_id} does not match the placement."
                )

        return plan
