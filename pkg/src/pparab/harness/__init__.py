"""Experiment runner: config files in, CSV reports out."""
