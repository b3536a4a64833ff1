"""
Test tooling: an RSpec-style DSL and runner, data factories, and a scripted
oracle for the reverse-construction pipeline.
"""

from .runner import TestRunner, load_spec_files
from .dsl import (
    describe,
    it,
    it_slow,
    expect,
    set_runner,
    get_runner,
)
from .factory import Factory, factory_field, sequence, trait
from .mock import ScriptedOracle, timeout

__all__ = [
    "TestRunner",
    "load_spec_files",
    "describe",
    "it",
    "it_slow",
    "expect",
    "set_runner",
    "get_runner",
    "Factory",
    "factory_field",
    "sequence",
    "trait",
    "ScriptedOracle",
    "timeout",
]
