"""Exception hierarchy shared by parsing, execution, synthesis and checking."""
from typing import Any, Dict, List, Optional


class CcdfgError(Exception):
    """Base class. ``kind`` is the stable name printed by the CLI and the API."""

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message

    @property
    def kind(self) -> str:
        return type(self).__name__

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "message": self.message}


# Parsing

class CcdfgSyntaxError(CcdfgError):
    def __init__(self, message: str, line: int = 0, column: int = 0, token: str = ""):
        where = f"line {line}, column {column}" if line else "input"
        super().__init__(f"{where}: {message}" + (f" (at {token!r})" if token else ""))
        self.line = line
        self.column = column
        self.token = token

    @property
    def kind(self) -> str:
        return "SyntaxError"

    def to_dict(self) -> Dict[str, Any]:
        return {**super().to_dict(), "line": self.line, "column": self.column, "token": self.token}


class SemanticError(CcdfgError):
    pass


class RangeError(CcdfgError):
    pass


# Execution

class ExecutionError(CcdfgError):
    pass


class UnboundVariable(ExecutionError):
    def __init__(self, name: str):
        super().__init__(f"variable {name!r} is not bound")
        self.name = name


class UnmappedAddress(ExecutionError):
    def __init__(self, address: int):
        super().__init__(f"address {address} is not mapped")
        self.address = address


class PhiUndefined(ExecutionError):
    def __init__(self, prev_bb: Optional[str], preds: List[str]):
        super().__init__(f"phi undefined when reached from {prev_bb!r}; predecessors are {preds}")
        self.prev_bb = prev_bb
        self.preds = preds


class EmptyRegion(ExecutionError):
    def __init__(self):
        super().__init__("region has no scheduling steps")


# Synthesis

class SynthesisError(CcdfgError):
    pass


class HazardConflict(SynthesisError):
    def __init__(self, writer_step: str, reader_step: str, var: str):
        super().__init__(
            f"cannot combine steps: {writer_step!r} of an older iteration and {reader_step!r} "
            f"of a younger one conflict on {var!r}"
        )
        self.writer_step = writer_step
        self.reader_step = reader_step
        self.var = var

    def to_dict(self) -> Dict[str, Any]:
        return {**super().to_dict(), "writer_step": self.writer_step,
                "reader_step": self.reader_step, "var": self.var}


class NameCollision(SynthesisError):
    def __init__(self, var: str):
        super().__init__(f"name {var!r} is already taken")
        self.var = var

    def to_dict(self) -> Dict[str, Any]:
        return {**super().to_dict(), "var": self.var}


class InvalidParams(SynthesisError):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class NotPipelinable(SynthesisError):
    def __init__(self, diagnostics: list):
        rules = ", ".join(sorted({d.rule for d in diagnostics}))
        super().__init__(f"loop is not pipelinable ({rules})")
        self.diagnostics = diagnostics

    def to_dict(self) -> Dict[str, Any]:
        return {**super().to_dict(), "diagnostics": [d.model_dump() for d in self.diagnostics]}


# Checking

class PreconditionViolation(CcdfgError):
    pass
