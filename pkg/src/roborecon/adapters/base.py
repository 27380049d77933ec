"""Common adapter skeleton."""

from __future__ import annotations

from abc import ABC, abstractmethod

from ..engine import ProbeContext, Target


class Adapter(ABC):
    """One robot technology's probe logic.

    Probes must be reentrant and keep no shared mutable state: the engine
    runs any number of them concurrently and every socket they open must go
    through the supplied :class:`ProbeContext`.
    """

    name: str = ""

    @abstractmethod
    async def probe(self, target: Target, ctx: ProbeContext) -> list[tuple[Target, object]]:
        """Probe one target; return (target, payload) result pairs.

        Most probes return a single pair. Extended probes may fan out
        (e.g. a per-port sweep) and return one pair per discovered endpoint.
        """
        raise NotImplementedError
