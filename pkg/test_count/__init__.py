"""Tests pour count : directions de réseau et bornes de classes."""
