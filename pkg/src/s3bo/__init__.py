"""Scalable Bayesian optimization: sparse GPs, random embeddings, asynchronous workers."""

from s3bo.acquisition import AcquisitionSpec, acquisition_eval, maximize_acquisition
from s3bo.benchmarks import BenchmarkSpec, evaluate
from s3bo.embedding import Embedding, draw_embedding, embed_to_x, mc_bound_probability
from s3bo.errors import ConfigError, InputError, NumericalError, ObjectiveFailure, ProtocolError
from s3bo.gp_exact import Dataset, ExactGpModel, fit_exact, log_marginal_likelihood, predict_exact
from s3bo.gp_sparse import SparseGpModel, elbo, fit_sparse, predict_sparse, sample_inducing
from s3bo.kernels import KernelSpec, kernel_eval, kernel_matrix

__version__ = "0.1.0"
