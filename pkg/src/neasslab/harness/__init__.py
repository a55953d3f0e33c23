"""Experiment orchestration: config, sweeps, CSV emission, figures, CLI."""
