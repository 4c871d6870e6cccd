from dataclasses import dataclass
from enum import Enum


class InstanceState(Enum):
    RUNNING = "running"
    IDLE = "idle"


@dataclass(slots=True)
class InstanceRecord:
    """One deployed VNF instance of the single-chain online algorithm.

    Attributes
    ----------
    type_id: int
        The VNF type of the instance
    server_id: int
        0-based server row the instance occupies
    state: InstanceState
        Running instances carry traffic, idle ones wait for reuse or removal
    counter: int
        Idle slots completed since the instance was last switched to idle
    deadline: int
        Sampled removal deadline, in [1, delta]; 0 while running
    activation_seq: int
        Monotone sequence number of the last switch to running
    """

    type_id: int
    server_id: int
    state: InstanceState
    activation_seq: int
    counter: int = 0
    deadline: int = 0

    @property
    def is_running(self) -> bool:
        return self.state is InstanceState.RUNNING

    def activate(self, seq: int) -> None:
        self.state = InstanceState.RUNNING
        self.activation_seq = seq
        self.counter = 0
        self.deadline = 0

    def idle(self, deadline: int) -> None:

        if deadline < 1:
            raise ValueError("An idle deadline must be at least one slot.")

        self.state = InstanceState.IDLE
        self.counter = 0
        self.deadline = deadline
