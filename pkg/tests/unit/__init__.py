"""Unit tests for spckd."""
