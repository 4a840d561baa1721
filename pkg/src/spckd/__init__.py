"""spckd: single-pixel camera design by knowledge distillation."""

__version__ = "0.1.0"
