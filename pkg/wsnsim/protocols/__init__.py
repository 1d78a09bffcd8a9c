"""Dissemination protocols; look them up through `wsnsim.protocols.registry`."""
