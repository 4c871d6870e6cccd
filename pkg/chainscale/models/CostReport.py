from dataclasses import dataclass, field
from fractions import Fraction


@dataclass
class CostReport:
    """Per-slot and cumulative cost of one algorithm run.

    Costs are exact Fractions: instance counts are integers and unit costs
    come from the scenario as exact decimals, so totals equal the per-slot
    sums without rounding.

    Attributes
    ----------
    per_slot: list[tuple[Fraction, Fraction]]
        (operational, deployment) for every processed slot

    Methods
    -------
    add(operational, deployment)
        Appends one slot
    totals
        (operational, deployment, total)
    """

    per_slot: list[tuple[Fraction, Fraction]] = field(default_factory=list)

    def add(self, operational: Fraction, deployment: Fraction) -> None:
        self.per_slot.append((Fraction(operational), Fraction(deployment)))

    def __len__(self):
        return len(self.per_slot)

    @property
    def operational(self) -> Fraction:
        return sum((op for op, _ in self.per_slot), Fraction(0))

    @property
    def deployment(self) -> Fraction:
        return sum((dep for _, dep in self.per_slot), Fraction(0))

    @property
    def total(self) -> Fraction:
        return self.operational + self.deployment

    @property
    def totals(self) -> tuple[Fraction, Fraction, Fraction]:
        operational = self.operational
        deployment = self.deployment
        return operational, deployment, operational + deployment

    def rows(self) -> list[tuple[int, float, float, float]]:
        """(slot, operational, deployment, total) with 1-based slots."""

        return [
            (t + 1, float(op), float(dep), float(op + dep))
            for t, (op, dep) in enumerate(self.per_slot)
        ]

    def serialize(self) -> dict:
        operational, deployment, total = self.totals

        return {
            "operational": float(operational),
            "deployment": float(deployment),
            "total": float(total),
            "exact": {
                "operational": str(operational),
                "deployment": str(deployment),
                "total": str(total),
            },
            "slots": len(self.per_slot),
        }
