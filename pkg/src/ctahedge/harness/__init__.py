"""Experiment runner, bound checks, plots and the command-line interface."""
