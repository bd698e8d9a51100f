"""Deterministic simulator for denoising, adaptive, online vertical
federated learning over sequential multi-sensor streams."""

__version__ = "0.1.0"
