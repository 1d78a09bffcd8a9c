from typing import Dict, Tuple, Type

from wsnsim.protocols.base import Protocol
from wsnsim.protocols.cbddp import CbddpProtocol
from wsnsim.protocols.dddp import DddpProtocol
from wsnsim.protocols.eagddp import EagddpProtocol
from wsnsim.protocols.fdddp import FdddpProtocol

PROTOCOLS: Dict[str, Type[Protocol]] = {
    cls.name: cls
    for cls in (FdddpProtocol, DddpProtocol, CbddpProtocol, EagddpProtocol)
}
PROTOCOL_NAMES: Tuple[str, ...] = tuple(PROTOCOLS)


def get_protocol(name: str) -> Type[Protocol]:
    try:
        return PROTOCOLS[name.lower()]
    except KeyError:
        raise KeyError(
            f"unknown protocol {name!r} (known: {', '.join(PROTOCOL_NAMES)})"
        ) from None
