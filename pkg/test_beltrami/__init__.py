"""Tests pour beltrami : dilatations, coefficient de Beltrami, solveur."""
