"""Single-pixel camera sensing with optimizable coded apertures."""

from spckd.sensing.aperture import CodedApertureBank, SensingShape, binarize_ste, build_sensing
from spckd.sensing.export import ApertureExport, load_aperture, save_aperture
from spckd.sensing.operators import awgn, reproject, spc_adjoint, spc_forward

__all__ = [
    "ApertureExport",
    "CodedApertureBank",
    "SensingShape",
    "awgn",
    "binarize_ste",
    "build_sensing",
    "load_aperture",
    "reproject",
    "save_aperture",
    "spc_adjoint",
    "spc_forward",
]
