from .core import (BACKENDS, DONE_MSG, Backend, BufferOverflow, DirectionViolation, Endpoint,
                   FidelityViolation, ForwardLastViolation, Message, NaiveBackend, OptBackend,
                   OwnershipViolation, RetiredChannelUse, RuntimePanic, Stats, TreeShapeViolation,
                   fwd, label, make_backend, val)

__all__ = [
    "BACKENDS", "DONE_MSG", "Backend", "BufferOverflow", "DirectionViolation", "Endpoint",
    "FidelityViolation", "ForwardLastViolation", "Message", "NaiveBackend", "OptBackend",
    "OwnershipViolation", "RetiredChannelUse", "RuntimePanic", "Stats", "TreeShapeViolation",
    "fwd", "label", "make_backend", "val",
]
