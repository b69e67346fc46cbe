"""Exception hierarchy shared by the frontend, the analyses and the agent loop."""

from __future__ import annotations


class IrqavError(Exception):
    """Base class for every error raised by this package."""


class FrontendError(IrqavError):
    pass


class CSyntaxError(FrontendError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message


class UnsupportedConstruct(FrontendError):
    def __init__(self, line: int, construct: str):
        super().__init__(f"line {line}: unsupported construct: {construct}")
        self.line = line
        self.construct = construct


class MissingMain(FrontendError):
    def __init__(self) -> None:
        super().__init__("program has no `main` function")


class ModelError(FrontendError):
    """The parsed program violates a model invariant (e.g. duplicate ISR priority)."""


class SimulationError(IrqavError):
    """Runtime fault inside the interleaving simulator (bad index, division by zero...)."""


class TraceBudgetExceeded(IrqavError):
    def __init__(self, limit: int):
        super().__init__(f"trace budget of {limit} exhausted; results are partial")
        self.limit = limit


class BackendUnavailable(IrqavError):
    pass


class MalformedReply(IrqavError):
    def __init__(self, message: str, reply: str = ""):
        super().__init__(message)
        self.reply = reply


class PromptOverBudget(IrqavError):
    def __init__(self, size: int, budget: int):
        super().__init__(f"prompt of {size} characters exceeds budget {budget}")
        self.size = size
        self.budget = budget
