"""Computable wave-front-set cone calculus for small matrix Lie groups."""
from __future__ import annotations

__version__ = "0.1.0"
