"""spckd test suite."""
