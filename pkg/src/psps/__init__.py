"""Stochastic Polyak step-size methods with diagonal preconditioning."""

from .dataio import BatchPlan, ScalingSpec, SparseDataset, parse_libsvm, remap_labels, scale_columns
from .harness import RunConfig, TraceRecord, read_csv, run_experiment, summarize, write_csv
from .losses import LossOracle
from .precond import AdamConfig, HutchinsonConfig, PreconditionerState
from .steppers import SlackConfig, SlackState, StepResult, psps_step, pspsl1_step, pspsl2_step, sps_step

__version__ = "0.1.0"
