"""Photon-number statistics of harmonic generation."""
