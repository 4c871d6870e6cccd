from dataclasses import dataclass
from typing import Iterable
import numpy as np
import numpy.typing as npt
from chainscale.errors import DimensionError

# n_i(t): one non-negative instance count per VNF type, index i is type i + 1
DemandVector = npt.NDArray[np.int64]


@dataclass(frozen=True, eq=False)
class Placement:
    """Number of instances of every VNF type on every server in one slot.

    Attributes
    ----------
    matrix: np.ndarray
        U x I non-negative integer matrix; row u is server u, column i is
        VNF type i + 1

    Methods
    -------
    zeros(num_servers, num_types)
        The empty placement, used as x(0)
    totals()
        Per-type instance counts summed over servers
    digest_into(hasher)
        Feeds the matrix bytes to a hashlib object
    """

    matrix: np.ndarray

    def __post_init__(self):

        matrix = np.array(self.matrix, dtype=np.int64, copy=True)

        if matrix.ndim != 2:
            raise DimensionError("A placement must be a servers x types matrix.")

        if np.any(matrix < 0):
            raise ValueError("A placement cannot hold a negative instance count.")

        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @classmethod
    def zeros(cls, num_servers: int, num_types: int) -> "Placement":
        return cls(np.zeros((num_servers, num_types), dtype=np.int64))

    @classmethod
    def from_rows(cls, rows: Iterable[Iterable[int]], num_types: int) -> "Placement":
        matrix = np.array([list(r) for r in rows], dtype=np.int64).reshape(-1, num_types)
        return cls(matrix)

    @property
    def num_servers(self) -> int:
        return self.matrix.shape[0]

    @property
    def num_types(self) -> int:
        return self.matrix.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def totals(self) -> DemandVector:
        return self.matrix.sum(axis=0)

    def digest_into(self, hasher) -> None:
        hasher.update(np.ascontiguousarray(self.matrix, dtype="<i8").tobytes())

    def __eq__(self, other):

        if not isinstance(other, Placement):
            return NotImplemented

        return self.matrix.shape == other.matrix.shape and bool(np.array_equal(self.matrix, other.matrix))

    def __hash__(self):
        return hash((self.matrix.shape, self.matrix.tobytes()))

    def __repr__(self):
        return f"<Placement {self.num_servers}x{self.num_types} totals={self.totals().tolist()}>"

    def serialize(self) -> list[list[int]]:
        return self.matrix.tolist()
