"""Shared exception hierarchy.

Every error the toolkit raises deliberately derives from ToolError so
callers (CLI, service) can distinguish tool-level failures from plain bugs.
"""

from __future__ import annotations


class ToolError(Exception):
    """Base class for all deliberate tool errors."""


class UnknownProgram(ToolError):
    def __init__(self, name: str):
        super().__init__(f"no registered program named {name!r}")
        self.name = name


class InvalidDest(ToolError):
    def __init__(self, dest: int, world_size: int):
        super().__init__(f"destination rank {dest} outside world of size {world_size}")
        self.dest = dest
        self.world_size = world_size


class DeadlockError(ToolError):
    """No process can make progress while at least one is blocked."""

    def __init__(self, blocked: list[int]):
        super().__init__(f"deadlock, blocked ranks: {sorted(blocked)}")
        self.blocked = sorted(blocked)


class ProgramError(ToolError):
    """A program body raised an unexpected exception."""

    def __init__(self, rank: int, cause: BaseException):
        super().__init__(f"rank {rank} crashed: {cause!r}")
        self.rank = rank
        self.cause = cause


class ScheduleInfeasible(ToolError):
    """A scripted match decision can never be satisfied."""

    def __init__(self, decision, reason: str):
        super().__init__(f"infeasible schedule at {decision}: {reason}")
        self.decision = decision
        self.reason = reason


class FormatError(ToolError):
    """Malformed trace or schedule file."""

    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class UnknownEvent(ToolError):
    def __init__(self, ref):
        super().__init__(f"no event {ref!r} in trace")
        self.ref = ref


class CyclicTrace(ToolError):
    """Program-order plus message edges contain a cycle (corrupt trace)."""


class NotWildcard(ToolError):
    def __init__(self, ref):
        super().__init__(f"event {ref!r} is not a wildcard receive")
        self.ref = ref


class ReplayUnavailable(ToolError):
    """Exact race evaluation was requested without a replay handle."""


class InvalidManipulation(ToolError):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class InvalidInfo(ToolError):
    """Array distribution descriptor is internally inconsistent."""


class InfoMismatch(ToolError):
    """Array data does not match the extent implied by its descriptor."""


class OverlapConflict(ToolError):
    def __init__(self, index):
        super().__init__(f"conflicting values for global index {index}")
        self.index = index


class EmptyView(ToolError):
    """Operation requires at least one present element."""
