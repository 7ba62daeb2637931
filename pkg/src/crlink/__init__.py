"""Dual-transceiver cognitive radio link: codec, ARQ engine, mux, adaptation and simulator."""

__version__ = "0.1.0"
