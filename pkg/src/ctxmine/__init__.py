"""Contextual sequential pattern mining over multi-source learning-analytics data."""

from .contextdb import SequenceDatabase, build_database
from .lattice import enumerate_contexts, specializes
from .model import Concrete, Context, Generalized, MiningParams, Pattern
from .schema import load_schema, validate_schema
from .seqminer import mine

__all__ = [
    "Concrete",
    "Context",
    "Generalized",
    "MiningParams",
    "Pattern",
    "SequenceDatabase",
    "build_database",
    "enumerate_contexts",
    "load_schema",
    "mine",
    "specializes",
    "validate_schema",
]
__version__ = "0.1.0"
