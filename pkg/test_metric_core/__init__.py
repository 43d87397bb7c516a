"""Tests pour metric_core : courbure, équivariance, lieu plat, aire."""
