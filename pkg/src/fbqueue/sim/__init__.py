"""Seeded discrete-event simulation of the M/G/1 queue under FB, FB* and FIFO."""

from .coupling import (
    CoupledPathRecord,
    CoupledSummary,
    check_quantile_agreement,
    run_coupled,
    simulate_coupled,
)
from .montecarlo import (
    CycleBatch,
    EstimateRow,
    HorizonBatch,
    binomial_se,
    estimate_exceedance,
    exceedance_rows,
    simulate_cycles,
    simulate_horizons,
    wilson_interval,
)
from .queues import FBQueue, FBStarQueue, FIFOQueue, make_queue
from .runs import (
    BusyCycleRecord,
    HorizonResult,
    QueueParams,
    Streams,
    run_busy_cycle,
    run_horizon,
)
from .streams import ArrivalStream, ServiceStream
from .trace import ConservationReport, TraceEvent, format_trace, verify_work_conservation

__all__ = [
    "ArrivalStream",
    "BusyCycleRecord",
    "ConservationReport",
    "CoupledPathRecord",
    "CoupledSummary",
    "CycleBatch",
    "EstimateRow",
    "FBQueue",
    "FBStarQueue",
    "FIFOQueue",
    "HorizonBatch",
    "HorizonResult",
    "QueueParams",
    "ServiceStream",
    "Streams",
    "TraceEvent",
    "binomial_se",
    "check_quantile_agreement",
    "estimate_exceedance",
    "exceedance_rows",
    "format_trace",
    "make_queue",
    "run_busy_cycle",
    "run_coupled",
    "run_horizon",
    "simulate_coupled",
    "simulate_cycles",
    "simulate_horizons",
    "verify_work_conservation",
    "wilson_interval",
]
