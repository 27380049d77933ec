"""Robot-technology adapters. New technologies plug in by subclassing
:class:`base.Adapter` and registering the class here."""

from __future__ import annotations

from .base import Adapter

_REGISTRY: dict[str, type] = {}


def register(adapter_cls: type) -> type:
    _REGISTRY[adapter_cls.name] = adapter_cls
    return adapter_cls


def get_adapter(name: str, **kwargs) -> Adapter:
    """Instantiate a registered adapter by its scan-type name (ROS, SROS, IROUTERS)."""
    try:
        cls = _REGISTRY[name]
    except KeyError:
        known = ", ".join(sorted(_REGISTRY))
        raise KeyError(f"unknown adapter {name!r}; known: {known}") from None
    return cls(**kwargs)


def adapter_names() -> list[str]:
    return sorted(_REGISTRY)


from . import ros as _ros  # noqa: E402  (import for registration side effect)
from . import sros as _sros  # noqa: E402
from . import routers as _routers  # noqa: E402
