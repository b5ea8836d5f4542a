"""Steady states of collective spins coupled to damped auxiliary modes."""

__version__ = "0.1.0"
