"""Monitoring and debugging toolkit for simulated message-passing programs.

Record deterministic runs, rebuild the event graph with vector clocks,
detect communication errors, evaluate races at wildcard receives, compute
consistent-cut breakpoints, replay and manipulate executions, and explore
every reachable schedule. A CLI (``python -m mpdbg``) and a JSON session
service expose the same capabilities.
"""

from . import programs as _programs  # register built-ins on import
from .programs import register_builtin_programs
from .analysis import (
    EXACT_REPLAY,
    HB_FILTER,
    BreakpointCut,
    Finding,
    InfoRecord,
    RaceReport,
    compute_breakpoint,
    detect_errors,
    event_info,
    find_wildcard_receives,
    racing_messages,
)
from .arrays import (
    ArrayInfo,
    ArraySnapshot,
    GlobalArrayView,
    assemble,
    heat_diagram,
    local_extent,
    local_indices,
    mapping_view,
    scatter,
)
from .errors import (
    CyclicTrace,
    DeadlockError,
    EmptyView,
    FormatError,
    InfoMismatch,
    InvalidDest,
    InvalidInfo,
    InvalidManipulation,
    NotWildcard,
    OverlapConflict,
    ProgramError,
    ReplayUnavailable,
    ScheduleInfeasible,
    ToolError,
    UnknownEvent,
    UnknownProgram,
)
from .graph import (
    CorrectedTimeline,
    EventGraph,
    EventRef,
    build_graph,
    happens_before,
    raw_timeline,
    remove_overhead,
    synchronize_clocks,
    timeline_violations,
)
from .monitor import Event, Monitor, OverheadModel, QueueSnapshot, Trace, VarSnapshot
from .replay import (
    Execution,
    ExecutionSet,
    HaltedState,
    Manipulation,
    MatchSchedule,
    exact_candidates,
    explore_all,
    manipulate_and_replay,
    output_fingerprint,
    read_schedule,
    record,
    replay,
    run_to_breakpoint,
    write_schedule,
)
from .runtime import (
    ANY_SOURCE,
    ANY_TAG,
    Decision,
    Envelope,
    MessageId,
    ProgramSpec,
    RecvFilter,
    RunResult,
    SchedulerPolicy,
    get_program,
    register_program,
    registered_programs,
    run_program,
)
from .tracefile import read_trace, write_trace

__version__ = "0.1.0"
