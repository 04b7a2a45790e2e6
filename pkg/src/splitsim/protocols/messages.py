"""In-process message records and the communication transcript."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

import numpy as np

HEADER_BYTES = 32
KINDS = ("smashed", "smashed-grad", "client-params", "global-params", "client-grads", "control")


def payload_bytes(elements: int) -> int:
    return 8 * elements + HEADER_BYTES


@dataclass(frozen=True)
class Message:
    kind: str
    sender: str
    receiver: str
    round: int
    elements: int

    @property
    def nbytes(self) -> int:
        return payload_bytes(self.elements)

    @property
    def direction(self) -> str:
        s = self.sender.startswith("client")
        r = self.receiver.startswith("client")
        if s and r:
            return "peer"
        return "up" if s else "down"


@dataclass(frozen=True)
class SmashedBatch:
    """Cut-layer activations for one client batch, labels attached.

    Labels ride in the message header and are not counted as payload."""

    activations: np.ndarray
    labels: np.ndarray
    client: int
    seq: tuple[int, int]


@dataclass(frozen=True)
class SmashedGrad:
    grad: np.ndarray
    client: int
    seq: tuple[int, int]


def client(i: int) -> str:
    return f"client:{i}"


SERVER = "server"
FED_SERVER = "fed-server"


class Transcript:
    """Append-only message log."""

    def __init__(self):
        self.messages: list[Message] = []

    def send(self, kind: str, sender: str, receiver: str, round: int, elements: int) -> Message:
        if kind not in KINDS:
            raise ValueError(f"unknown message kind {kind!r}")
        msg = Message(kind, sender, receiver, round, int(elements))
        self.messages.append(msg)
        return msg

    def __len__(self) -> int:
        return len(self.messages)

    @property
    def total_bytes(self) -> int:
        return sum(m.nbytes for m in self.messages)

    def in_round(self, round: int) -> list[Message]:
        return [m for m in self.messages if m.round == round]

    def summary(self) -> dict:
        by_kind: dict = defaultdict(lambda: {"messages": 0, "bytes": 0})
        by_dir: dict = defaultdict(lambda: {"messages": 0, "bytes": 0})
        for m in self.messages:
            for table, key in ((by_kind, m.kind), (by_dir, m.direction)):
                table[key]["messages"] += 1
                table[key]["bytes"] += m.nbytes
        return {"messages": len(self.messages), "bytes": self.total_bytes,
                "by_kind": dict(by_kind), "by_direction": dict(by_dir)}
