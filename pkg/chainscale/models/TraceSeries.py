from dataclasses import dataclass
import numpy as np


@dataclass(frozen=True, eq=False)
class TraceSeries:
    """Input traffic rates per chain and slot.

    Attributes
    ----------
    rates: np.ndarray
        S x T matrix of non-negative rates in Mbps; row s is chain s + 1
    """

    rates: np.ndarray

    def __post_init__(self):

        rates = np.array(self.rates, dtype=np.float64, copy=True)

        if rates.ndim == 1:
            rates = rates.reshape(1, -1)

        if rates.ndim != 2:
            raise ValueError("Trace rates must be a chains x slots matrix.")

        if not np.all(np.isfinite(rates)):
            raise ValueError("Trace rates must be finite.")

        if np.any(rates < 0):
            raise ValueError("Trace rates cannot be negative.")

        rates.setflags(write=False)
        object.__setattr__(self, "rates", rates)

    @property
    def horizon(self) -> int:
        return self.rates.shape[1]

    @property
    def num_chains(self) -> int:
        return self.rates.shape[0]

    @property
    def peak(self) -> float:
        return float(self.rates.max()) if self.rates.size else 0.0

    @property
    def mean(self) -> float:
        return float(self.rates.mean()) if self.rates.size else 0.0

    @property
    def pmr(self) -> float:
        mean = self.mean
        return self.peak / mean if mean > 0 else 1.0

    def column(self, slot: int) -> np.ndarray:
        """Rates of every chain at a 0-based slot index."""
        return self.rates[:, slot]

    def head(self, horizon: int) -> "TraceSeries":
        return TraceSeries(self.rates[:, :horizon])

    def __len__(self):
        return self.horizon
