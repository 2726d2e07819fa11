"""Monte Carlo laboratory for log-concave covariance-type random matrices."""

import os

# One BLAS thread per eigensolve keeps spectra bit-identical across worker counts.
for _var in ("OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "OMP_NUM_THREADS"):
    os.environ.setdefault(_var, "1")

__version__ = "0.1.0"

__all__ = ["__version__"]
