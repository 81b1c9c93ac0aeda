"""Unique entity estimation with LSH-sampled record pairs."""
