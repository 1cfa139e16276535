"""Sesquicommuting finite-convolution kernels and their Sturm-Liouville operators."""
from ._accel import BACKEND
from .kernels import (
    CoefficientPair,
    Family,
    KernelFn,
    KernelSpec,
    ValidatedSpec,
    gauge_transform,
    kernel_taylor,
    load_spec,
    make_coefficients,
    make_kernel,
    spec_from_dict,
    spec_to_dict,
    validate_spec,
)

__version__ = "0.1.0"
