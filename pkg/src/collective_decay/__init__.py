"""Mean-field and exact open-system models of collective neutrino-emitting decay."""

__version__ = "0.1.0"
