"""Select the compiled particle kernels when built, else the numpy fallback."""
try:
    from . import _kernels as kernels
    BACKEND = "cython"
except ImportError:  # extension not built
    from . import _kernels_py as kernels
    BACKEND = "numpy"

born_likelihoods = kernels.born_likelihoods
weighted_tensor_power = kernels.weighted_tensor_power
systematic_resample = kernels.systematic_resample
