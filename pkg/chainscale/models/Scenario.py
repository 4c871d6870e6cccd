import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import lcm
from pathlib import Path
from typing import Any
import numpy as np
from chainscale.errors import ConfigurationError
from chainscale.models.Cluster import Cluster
from chainscale.models.ServiceChain import ServiceChain
from chainscale.models.VnfType import VnfType, as_fraction


def _scale_to_integers(values: list[Fraction]) -> tuple[int, list[int]]:
    """Common multiplier turning every value into an integer."""

    scale = lcm(*(v.denominator for v in values)) if values else 1
    return scale, [int(v * scale) for v in values]


@dataclass(frozen=True)
class Scenario:
    """The Scenario class bundles the VNF types, chains and cluster of one run.

    Attributes
    ----------
    types: tuple[VnfType, ...]
        VNF types ordered by id, ids exactly 1..I
    chains: tuple[ServiceChain, ...]
        Service chains ordered by id, ids exactly 1..S
    cluster: Cluster
        The homogeneous servers
    name: str
        Label used in reports

    Methods
    -------
    from_file(path)
        Loads and validates a JSON scenario file
    from_dict(data)
        Validates an already parsed scenario
    with_cost_ratio(ratio)
        Copy with deploy_cost = ratio * op_cost for every type
    demand_matrix
        I x R exact integer resource demands, columns scaled per resource
    capacity_vector
        R exact integer capacities on the same scale
    """

    types: tuple[VnfType, ...]
    chains: tuple[ServiceChain, ...]
    cluster: Cluster
    name: str = field(default="scenario", compare=False)

    def __post_init__(self):

        types = tuple(sorted(self.types, key=lambda t: t.id))
        chains = tuple(sorted(self.chains, key=lambda c: c.id))

        if not types:
            raise ConfigurationError("A scenario needs at least one VNF type.")

        if [t.id for t in types] != list(range(1, len(types) + 1)):
            raise ConfigurationError("VNF type ids must be exactly 1..I.")

        if [c.id for c in chains] != list(range(1, len(chains) + 1)):
            raise ConfigurationError("Chain ids must be exactly 1..S.")

        num_resources = self.cluster.num_resources

        for vnf in types:

            if len(vnf.demand) != num_resources:
                raise ConfigurationError(
                    f"VNF type {vnf.id} declares {len(vnf.demand)} resources, "
                    f"the cluster has {num_resources}."
                )

            if any(d > c for d, c in zip(vnf.demand, self.cluster.capacity)):
                raise ConfigurationError(
                    f"VNF type {vnf.id} does not fit into an empty server."
                )

        for chain in chains:
            unknown = [s for s in chain.stages if not 1 <= s <= len(types)]

            if unknown:
                raise ConfigurationError(
                    f"Chain {chain.id} references unknown VNF types {unknown}."
                )

        object.__setattr__(self, "types", types)
        object.__setattr__(self, "chains", chains)

    @property
    def num_types(self) -> int:
        return len(self.types)

    @property
    def num_chains(self) -> int:
        return len(self.chains)

    @property
    def num_servers(self) -> int:
        return self.cluster.num_servers

    def vnf(self, type_id: int) -> VnfType:
        return self.types[type_id - 1]

    def chain(self, chain_id: int) -> ServiceChain:
        return self.chains[chain_id - 1]

    @cached_property
    def _resource_scales(self) -> tuple[np.ndarray, np.ndarray]:

        demand = np.zeros((self.num_types, self.cluster.num_resources), dtype=np.int64)
        capacity = np.zeros(self.cluster.num_resources, dtype=np.int64)

        for r, cap in enumerate(self.cluster.capacity):
            column = [vnf.demand[r] for vnf in self.types] + [cap]
            _, scaled = _scale_to_integers(column)
            demand[:, r] = scaled[:-1]
            capacity[r] = scaled[-1]

        demand.setflags(write=False)
        capacity.setflags(write=False)

        return demand, capacity

    @property
    def demand_matrix(self) -> np.ndarray:
        return self._resource_scales[0]

    @property
    def capacity_vector(self) -> np.ndarray:
        return self._resource_scales[1]

    @cached_property
    def op_costs(self) -> tuple[Fraction, ...]:
        return tuple(vnf.op_cost for vnf in self.types)

    @cached_property
    def deploy_costs(self) -> tuple[Fraction, ...]:
        return tuple(vnf.deploy_cost for vnf in self.types)

    @cached_property
    def deploy_weights(self) -> tuple[int, np.ndarray]:
        """Integer deployment costs and the divisor that restores them."""

        scale, scaled = _scale_to_integers(list(self.deploy_costs))
        weights = np.asarray(scaled, dtype=np.int64)
        weights.setflags(write=False)

        return scale, weights

    @cached_property
    def max_cost_ratio(self) -> Fraction:
        return max(vnf.deploy_cost / vnf.op_cost for vnf in self.types)

    def chain_type_indices(self, chain: ServiceChain) -> list[int]:
        return [type_id - 1 for type_id in chain.stages]

    def with_cost_ratio(self, ratio: Any) -> "Scenario":
        ratio = as_fraction(ratio)

        if ratio < 0:
            raise ConfigurationError("The deployment to operational cost ratio cannot be negative.")

        types = tuple(vnf.with_costs(vnf.op_cost, vnf.op_cost * ratio) for vnf in self.types)

        return Scenario(types=types, chains=self.chains, cluster=self.cluster, name=self.name)

    def with_servers(self, num_servers: int) -> "Scenario":
        cluster = Cluster(num_servers=num_servers, capacity=self.cluster.capacity)

        return Scenario(types=self.types, chains=self.chains, cluster=cluster, name=self.name)

    def single_chain(self, chain_id: int) -> "Scenario":
        """Scenario restricted to one chain, renumbered as chain 1."""

        chain = self.chain(chain_id)
        only = ServiceChain(id=1, stages=chain.stages, gains=chain.gains, name=chain.name)

        return Scenario(types=self.types, chains=(only,), cluster=self.cluster, name=self.name)

    def serialize(self) -> dict:
        return {
            "name": self.name,
            "vnf_types": [vnf.serialize() for vnf in self.types],
            "chains": [chain.serialize() for chain in self.chains],
            "cluster": self.cluster.serialize(),
        }

    @classmethod
    def from_dict(cls, data: dict, name: str = "scenario") -> "Scenario":

        try:
            types = tuple(VnfType.unserialize(d) for d in data["vnf_types"])
            chains = tuple(ServiceChain.unserialize(d) for d in data["chains"])
            cluster = Cluster.unserialize(data["cluster"])

        except KeyError as e:
            raise ConfigurationError(f"The scenario is missing the section {e.args[0]!r}.")

        except ConfigurationError:
            raise

        except ValueError as e:
            raise ConfigurationError(str(e)) from e

        return cls(types=types, chains=chains, cluster=cluster, name=str(data.get("name", name)))

    @classmethod
    def from_file(cls, path: str | Path) -> "Scenario":
        path = Path(path)

        try:
            with open(path, "r") as file:
                data = json.load(file)

        except (OSError, json.JSONDecodeError) as e:
            raise ConfigurationError(f"Cannot read scenario {path}: {e}") from e

        return cls.from_dict(data, name=path.stem)
