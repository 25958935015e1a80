"""Experiment drivers: configuration, runners, persistence, and the CLI."""
