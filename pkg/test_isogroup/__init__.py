"""Tests pour isogroup : isométries, réseaux, classification."""
