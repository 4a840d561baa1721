"""Integration tests for spckd."""
