"""Tests for chordnet."""
