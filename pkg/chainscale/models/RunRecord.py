from datetime import datetime
from sqlalchemy import Integer, String, Float, Boolean, DateTime
from sqlalchemy.orm import Mapped, mapped_column, validates
from chainscale.models.Base import Base
from chainscale.models.Experiment import ALGORITHMS


class RunRecord(Base):
    """The RunRecord class is one persisted row of the run ledger.

    Attributes
    ----------
    id: int
        The record's id
    scenario: str
        Name of the scenario the run used
    algorithm: str
        The simulated algorithm
    seed: int
        The run's seed
    cost_ratio: float
        Largest deployment to operational cost ratio of the scenario
    pmr: float
        Peak-to-mean ratio of the trace that was replayed
    horizon: int
        Number of slots processed
    operational: float
        Total operational cost
    deployment: float
        Total deployment cost
    total: float
        Total cost
    total_exact: str
        Total cost as an exact fraction
    lower_bound: float
        Offline lower bound of the same demand series
    static_cost: float
        Static peak provisioning cost of the same demand series
    digest: str
        sha256 of the placement trajectory
    completed: bool
        False when a capacity violation stopped the run
    violations: int
        Number of violation events
    created: datetime
        When the run was recorded
    """

    __tablename__ = "runs"
    id: Mapped[int] = mapped_column(Integer, primary_key=True, autoincrement=True)
    scenario: Mapped[str] = mapped_column(String(100), nullable=False)
    algorithm: Mapped[str] = mapped_column(String(20), nullable=False)
    seed: Mapped[int] = mapped_column(Integer, nullable=False)
    cost_ratio: Mapped[float] = mapped_column(Float, nullable=False)
    pmr: Mapped[float] = mapped_column(Float, nullable=False)
    horizon: Mapped[int] = mapped_column(Integer, nullable=False)
    operational: Mapped[float] = mapped_column(Float, nullable=False)
    deployment: Mapped[float] = mapped_column(Float, nullable=False)
    total: Mapped[float] = mapped_column(Float, nullable=False)
    total_exact: Mapped[str] = mapped_column(String(200), nullable=False)
    lower_bound: Mapped[float] = mapped_column(Float, nullable=True)
    static_cost: Mapped[float] = mapped_column(Float, nullable=True)
    digest: Mapped[str] = mapped_column(String(64), nullable=False)
    completed: Mapped[bool] = mapped_column(Boolean, default=True)
    violations: Mapped[int] = mapped_column(Integer, default=0)
    created: Mapped[datetime] = mapped_column(DateTime, default=datetime.now)

    def __repr__(self):
        return f"<RunRecord {self.id!r} - {self.algorithm!r} seed={self.seed!r}>"

    def __str__(self):
        return f"{self.id!r} - {self.algorithm} seed {self.seed}"

    def serialize(self) -> dict:
        """Returns a dictionary representation of the record.

        Returns
        -------
        dict
            A dictionary representation of the record
        """

        return {
            "id": self.id,
            "scenario": self.scenario,
            "algorithm": self.algorithm,
            "seed": self.seed,
            "cost_ratio": self.cost_ratio,
            "pmr": self.pmr,
            "horizon": self.horizon,
            "operational": self.operational,
            "deployment": self.deployment,
            "total": self.total,
            "total_exact": self.total_exact,
            "lower_bound": self.lower_bound,
            "static_cost": self.static_cost,
            "competitive_ratio": self.total / self.lower_bound if self.lower_bound else None,
            "cost_saving": 1.0 - self.total / self.static_cost if self.static_cost else None,
            "digest": self.digest,
            "completed": self.completed,
            "violations": self.violations,
            "created": str(self.created),
        }

    @validates("algorithm")
    def validate_algorithm(self, key, algorithm: str) -> str:
        """Validates the algorithm label.

        Parameters
        ----------
        algorithm: str
            The simulated algorithm

        Returns
        -------
        str
            The validated label
        """

        if algorithm not in ALGORITHMS:
            raise ValueError(f"{algorithm!r} is not a known algorithm.")

        return algorithm

    @validates("digest")
    def validate_digest(self, key, digest: str) -> str:

        if len(digest) != 64:
            raise ValueError("A run digest must be a 64 character sha256 hex string.")

        return digest
