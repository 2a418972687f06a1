"""Two Lambda-type atoms in a cavity: evolution toward the robust entangled state."""

__version__ = "0.1.0"
