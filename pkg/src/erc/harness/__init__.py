"""Experiment harness: configs, training loop, sweeps, logs and plots."""
