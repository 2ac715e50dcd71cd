"""Command-line entry point for solves, sweeps and verification runs."""
