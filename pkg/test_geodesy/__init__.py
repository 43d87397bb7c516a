"""Tests pour geodesy : géodésiques, distances, bandes plates."""
