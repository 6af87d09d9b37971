"""Public broadcast channel, reversible SWAP channel and the run transcript."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol

from .bits import BitString, Generator, random_bitstring
from .ledger import Agent

EVERYONE = "*"


class CapExceeded(Exception):
    """Broadcast longer than the public channel's O(nu) cap."""


class ChannelFailure(Exception):
    """An interceptor returned a string of the wrong length."""


@dataclass(frozen=True)
class Event:
    index: int
    kind: str  # broadcast | swap-send | swap-deliver | intercept | abort
    agent: str
    label: str
    payload: Optional[BitString] = None
    receiver: Optional[str] = None
    visible_to: frozenset = frozenset({EVERYONE})

    def visible(self, agent: str) -> bool:
        return EVERYONE in self.visible_to or agent in self.visible_to

    def to_dict(self) -> dict:
        d = {"index": self.index, "kind": self.kind, "agent": self.agent, "label": self.label}
        if self.receiver is not None:
            d["receiver"] = self.receiver
        d["payload"] = None if self.payload is None else self.payload.to_json()
        d["visible_to"] = sorted(self.visible_to)
        return d


@dataclass
class Transcript:
    events: list[Event] = field(default_factory=list)

    def log(self, kind, agent, label, payload=None, receiver=None, visible_to=(EVERYONE,)) -> Event:
        ev = Event(len(self.events), kind, agent, label, payload, receiver, frozenset(visible_to))
        self.events.append(ev)
        return ev

    def view(self, agent: str) -> list[Event]:
        return [ev for ev in self.events if ev.visible(agent)]

    def broadcasts(self) -> list[Event]:
        return [ev for ev in self.events if ev.kind == "broadcast"]

    def to_jsonl(self) -> str:
        return "".join(json.dumps(ev.to_dict(), sort_keys=True) + "\n" for ev in self.events)

    @classmethod
    def from_jsonl(cls, text: str) -> "Transcript":
        tr = cls()
        for line in text.splitlines():
            d = json.loads(line)
            payload = None if d["payload"] is None else BitString.from_json(d["payload"])
            tr.events.append(
                Event(d["index"], d["kind"], d["agent"], d["label"], payload,
                      d.get("receiver"), frozenset(d["visible_to"]))
            )
        return tr


class PublicChannel:
    """Authenticated broadcast; every message is a copy, so the sender pays its length."""

    def __init__(self, length_cap: int, transcript: Transcript | None = None):
        self.length_cap = length_cap
        self.transcript = transcript if transcript is not None else Transcript()

    def broadcast(self, sender: Agent, msg: BitString, label: str = "") -> BitString:
        if len(msg) > self.length_cap:
            raise CapExceeded(f"{label or 'message'} of {len(msg)} bits exceeds cap {self.length_cap}")
        sender.ledger.charge(len(msg), f"broadcast:{label}" if label else "broadcast")
        self.transcript.log("broadcast", sender.name, label, msg)
        return msg


class Interceptor(Protocol):
    """Eve sitting on the SWAP channel.

    Receives the string in transit by value and returns what is delivered
    (``None`` blocks delivery).  Anything kept past returning must go
    through ``eve.retain``.
    """

    def intercept(self, x: BitString, eve: Agent, rng: Generator) -> Optional[BitString]: ...


@dataclass
class SwapChannel:
    """Reversible exchange: the receiver's junk goes back to the sender for free.

    ``noise`` (if given) acts on the string in transit before any interceptor
    sees it, so Eve always observes exactly what Bob would get from a passive
    channel.
    """

    transcript: Transcript = field(default_factory=Transcript)
    interceptor: Optional[Interceptor] = None
    eve: Optional[Agent] = None
    eve_rng: Optional[Generator] = None
    noise: Optional[Callable[[BitString], BitString]] = None

    def swap_transfer(self, sender: Agent, x: BitString, receiver: Agent, junk_rng: Generator,
                      label: str = "") -> tuple[Optional[BitString], BitString]:
        """Move ``x`` to ``receiver``; return ``(delivered, junk)``.

        ``junk`` is the receiver's fresh random register that lands in the
        sender's lab in exchange; the caller must overwrite the sent register
        with it.  ``delivered`` is ``None`` when the interceptor blocks.
        """
        junk = random_bitstring(len(x), junk_rng)
        self.transcript.log("swap-send", sender.name, label, x, receiver.name, {sender.name})
        in_transit = self.noise(x) if self.noise is not None else x
        delivered: Optional[BitString] = in_transit
        if self.interceptor is not None:
            self.transcript.log("intercept", self.eve.name, label, in_transit, receiver.name, {self.eve.name})
            delivered = self.interceptor.intercept(in_transit, self.eve, self.eve_rng)
            if delivered is not None and len(delivered) != len(x):
                self.transcript.log("abort", EVERYONE, f"channel-failure:{label}")
                raise ChannelFailure(f"interceptor returned {len(delivered)} bits for a {len(x)}-bit transfer")
        if delivered is not None:
            self.transcript.log("swap-deliver", receiver.name, label, delivered, receiver.name, {receiver.name})
        self.transcript.log("swap-deliver", sender.name, f"junk:{label}", junk, sender.name, {sender.name})
        return delivered, junk
