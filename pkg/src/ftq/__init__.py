"""Fault-tolerant NMPC workbench for quadrotors with a failed rotor."""
__version__ = "0.1.0"
