"""Balanced signed graph learning by sign-constrained sparse LPs."""
