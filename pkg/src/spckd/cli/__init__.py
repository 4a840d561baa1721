"""Command line interface for spckd."""
