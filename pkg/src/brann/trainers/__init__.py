"""Training algorithms sharing one epoch loop, stopping rules and trace format."""

from .config import FIRST_ORDER_KINDS, AlgorithmKind, StoppingRule, StopReason, TrainingConfig
from .first_order import OptimizerState, first_order_step, init_state, line_search
from .levenberg import EpochResult, LMFactorizationError, lm_step, trainbr_epoch, trainlm_epoch
from .loop import TrainingAborted, train
from .trace import TRACE_HEADER, TraceRow, TrainingTrace, read_trace_csv

__all__ = [
    "AlgorithmKind", "FIRST_ORDER_KINDS", "StoppingRule", "StopReason", "TrainingConfig",
    "OptimizerState", "first_order_step", "init_state", "line_search",
    "EpochResult", "LMFactorizationError", "lm_step", "trainbr_epoch", "trainlm_epoch",
    "TrainingAborted", "train",
    "TRACE_HEADER", "TraceRow", "TrainingTrace", "read_trace_csv",
]
