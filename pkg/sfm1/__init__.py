"""SFM1: a process algebra for nondeterministic finite automata."""

__version__ = "1.0.0"
