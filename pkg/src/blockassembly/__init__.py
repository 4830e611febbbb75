"""Toolkit for learning to assemble block shape categories by taking them apart."""

from __future__ import annotations

__version__ = "0.1.0"
