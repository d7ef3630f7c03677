"""Driven open qubit: Redfield vs. completely positive dynamics and their entropy production."""

__version__ = "0.1.0"

__all__ = [
    "bath",
    "config",
    "dynamics",
    "errors",
    "experiments",
    "formatting",
    "generators",
    "main",
    "qubit",
    "sweep",
    "thermo",
    "types",
]
