"""Control Lyapunov function synthesis for switched polynomial systems."""

__version__ = "0.1.0"
