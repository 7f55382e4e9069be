"""Poisson image deconvolution with total variation by augmented Lagrangian."""
from .grid import GridMismatchError, PixelIndex, elementwise, norms
from .metrics import MetricsReport, aggregate, isnr, mae
from .poisson import neg_log_likelihood, prox_poisson, sample_poisson
from .solver import Problem, RunReport, SolverConfig, SolverState, objective, pidal_step, run
from .spectral import BlurKernel, TransferFunction, convolve, convolve_adjoint, plan, solve_x_update
from .tv import DualField, TvDenoiseSettings, divergence, gradient, tv_denoise, tv_norm

__version__ = "0.1.0"
