from src.sim.events import EventKind, SimEvent
from src.sim.report import SimReport, StageRecord, cost_from_trace, schedule_from_report
from src.sim.simulator import (
    Simulator,
    all_public_schedule,
    execute_fixed,
    run_all_private,
    run_all_public,
    run_greedy,
)
