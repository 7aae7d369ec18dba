"""Baseline estimators: near-field MUSIC and a real-valued time-delay network."""
