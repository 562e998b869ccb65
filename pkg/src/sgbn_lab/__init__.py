"""Sparse Gaussian Bayesian networks with an ordering-based acyclicity
constraint, and two discriminative refinements of a class pair."""

__version__ = "0.1.0"

from .errors import (AlgorithmError, CycleError, DimensionError, InfeasibleBudgetError,
                     InputError, NotDagError, SgbnError, SolverError, ZeroVarianceError)
from .model import (Cpdag, Dataset, NoiseModel, SgbnParams, dag_to_cpdag, fitting_error,
                    is_dag, log_likelihood, standardize, structure_of)
from .ordering import OrderingCertificate, lambda_dag_bound, solve_ordering, verify_certificate
from .orsgbn import OrConfig
from .classifiers import ClassPairModel, sgbn_predict, svm_predict, svm_train
from .fisher import FisherVector, SvmConfig, fisher_vector, kernel_matrix, scatter_trace
from .klsgbn import KlConfig
from .mmsgbn import MarginState, MmConfig
from .bench import BenchmarkNetwork, RecoveryMetrics, builtin_chain, sample_data

__all__ = [name for name in dir() if not name.startswith("_")]
