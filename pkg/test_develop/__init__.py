"""Tests pour develop : conjugué harmonique, application développante."""
