"""Tests de bout en bout de la CLI."""
