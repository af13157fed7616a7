"""
CCDFG data model.

A sequential design is three regions of scheduling steps (pre / loop / post).
A scheduling step is one clock cycle made of microsteps; a microstep groups
statements that run concurrently. Every model here is frozen: designs are
built once, then only read.
"""
import re
from typing import Annotated, FrozenSet, Iterable, List, Literal, Optional, Set, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from core import SHADOW_SUFFIX, VALUE_WIDTH
from errors import NameCollision

IDENTIFIER = re.compile(r"[A-Za-z_][A-Za-z0-9_.']*\Z")
LABEL = re.compile(r"[^\s();]+\Z")

BINARY_OPS = ("add", "sub", "mul", "xor", "and", "or", "shl", "lshr", "eq", "lt")
MEMORY = "<memory>"

# Words with a fixed meaning in the statement syntax
KEYWORDS = frozenset({"phi", "store", "br", "load", "getelementptr", *BINARY_OPS})


def is_identifier(name: str) -> bool:
    return bool(IDENTIFIER.match(name)) and name not in KEYWORDS


def is_auxiliary(name: str) -> bool:
    """Names introduced by the synthesizer carry the shadow suffix."""
    return name.endswith(SHADOW_SUFFIX)


def _check_identifier(name: str) -> str:
    if not is_identifier(name):
        raise ValueError(f"invalid variable name {name!r}")
    return name


def _check_label(label: str) -> str:
    if not LABEL.match(label):
        raise ValueError(f"invalid block label {label!r}")
    return label


class _Node(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


# Expressions

class Const(_Node):
    kind: Literal["const"] = "const"
    value: int = Field(ge=0)

    @field_validator("value")
    @classmethod
    def _fits_width(cls, value: int) -> int:
        if value >= 1 << VALUE_WIDTH:
            raise ValueError(f"constant {value} does not fit in {VALUE_WIDTH} bits")
        return value


class Var(_Node):
    kind: Literal["var"] = "var"
    name: str

    @field_validator("name")
    @classmethod
    def _name(cls, value: str) -> str:
        return _check_identifier(value)


Atom = Annotated[Union[Const, Var], Field(discriminator="kind")]


class BinOp(_Node):
    kind: Literal["binop"] = "binop"
    op: Literal["add", "sub", "mul", "xor", "and", "or", "shl", "lshr", "eq", "lt"]
    lhs: Atom
    rhs: Atom


class Load(_Node):
    kind: Literal["load"] = "load"
    addr: "Expression"


class GetElemPtr(_Node):
    kind: Literal["gep"] = "gep"
    base: str
    offset: "Expression"

    @field_validator("base")
    @classmethod
    def _base(cls, value: str) -> str:
        return _check_identifier(value)


Expression = Annotated[Union[Const, Var, BinOp, Load, GetElemPtr], Field(discriminator="kind")]

Load.model_rebuild()
GetElemPtr.model_rebuild()


# Statements

class Assign(_Node):
    kind: Literal["assign"] = "assign"
    target: str
    rhs: Expression

    @field_validator("target")
    @classmethod
    def _target(cls, value: str) -> str:
        return _check_identifier(value)


class Store(_Node):
    kind: Literal["store"] = "store"
    addr: Expression
    value: Expression


class PhiChoice(_Node):
    rhs: Expression
    pred: str

    @field_validator("pred")
    @classmethod
    def _pred(cls, value: str) -> str:
        return _check_label(value)


class Phi(_Node):
    kind: Literal["phi"] = "phi"
    target: str
    choices: Tuple[PhiChoice, PhiChoice]

    @field_validator("target")
    @classmethod
    def _target(cls, value: str) -> str:
        return _check_identifier(value)

    @model_validator(mode="after")
    def _distinct_preds(self) -> "Phi":
        if self.choices[0].pred == self.choices[1].pred:
            raise ValueError(f"phi for {self.target!r} has two choices from {self.choices[0].pred!r}")
        return self

    @property
    def preds(self) -> List[str]:
        return [choice.pred for choice in self.choices]


class Branch(_Node):
    """Explicit control transfer. Only used to describe loops that are not pipelinable."""
    kind: Literal["br"] = "br"
    targets: Tuple[str, ...] = Field(min_length=1, max_length=2)
    cond: Optional[Atom] = None

    @field_validator("targets")
    @classmethod
    def _targets(cls, value):
        return tuple(_check_label(t) for t in value)

    @model_validator(mode="after")
    def _shape(self) -> "Branch":
        if (self.cond is None) != (len(self.targets) == 1):
            raise ValueError("conditional branches take two targets, unconditional ones take one")
        return self


Statement = Annotated[Union[Assign, Store, Phi, Branch], Field(discriminator="kind")]


class Microstep(_Node):
    statements: Tuple[Statement, ...] = Field(min_length=1)

    @model_validator(mode="after")
    def _single_writer(self) -> "Microstep":
        seen: Set[str] = set()
        for st in self.statements:
            target = getattr(st, "target", None)
            if target is None:
                continue
            if target in seen:
                raise ValueError(f"{target!r} is written twice in one microstep")
            seen.add(target)
        return self


class SchedulingStep(_Node):
    label: str
    microsteps: Tuple[Microstep, ...] = ()

    @field_validator("label")
    @classmethod
    def _label(cls, value: str) -> str:
        return _check_label(value)

    def statements(self) -> List:
        return [st for micro in self.microsteps for st in micro.statements]


class Ccdfg(_Node):
    pre: Tuple[SchedulingStep, ...] = ()
    loop: Tuple[SchedulingStep, ...] = ()
    post: Tuple[SchedulingStep, ...] = ()

    def steps(self) -> List[SchedulingStep]:
        return [*self.pre, *self.loop, *self.post]


class PipelinedCcdfg(_Node):
    entry: Tuple[SchedulingStep, ...] = ()
    prologue: Tuple[SchedulingStep, ...] = ()
    fullstage: Tuple[SchedulingStep, ...] = Field(min_length=1)
    epilogue: Tuple[SchedulingStep, ...] = ()
    exit: Tuple[SchedulingStep, ...] = ()

    def steps(self) -> List[SchedulingStep]:
        return [*self.entry, *self.prologue, *self.fullstage, *self.epilogue, *self.exit]


# Read/write analysis

class ReadWriteSets(_Node):
    reads: FrozenSet[str] = frozenset()
    writes: FrozenSet[str] = frozenset()
    mem_reads: bool = False
    mem_writes: bool = False

    def __or__(self, other: "ReadWriteSets") -> "ReadWriteSets":
        return ReadWriteSets(
            reads=self.reads | other.reads,
            writes=self.writes | other.writes,
            mem_reads=self.mem_reads or other.mem_reads,
            mem_writes=self.mem_writes or other.mem_writes,
        )

    @property
    def touches_memory(self) -> bool:
        return self.mem_reads or self.mem_writes


def expression_vars(expr) -> Set[str]:
    """Binding variables an expression reads. GetElemPtr bases live in the pointer table."""
    if isinstance(expr, Var):
        return {expr.name}
    if isinstance(expr, BinOp):
        return expression_vars(expr.lhs) | expression_vars(expr.rhs)
    if isinstance(expr, Load):
        return expression_vars(expr.addr)
    if isinstance(expr, GetElemPtr):
        return expression_vars(expr.offset)
    return set()


def expression_loads(expr) -> bool:
    if isinstance(expr, Load):
        return True
    if isinstance(expr, GetElemPtr):
        return expression_loads(expr.offset)
    return False


def expression_pointers(expr) -> Set[str]:
    if isinstance(expr, GetElemPtr):
        return {expr.base} | expression_pointers(expr.offset)
    if isinstance(expr, Load):
        return expression_pointers(expr.addr)
    return set()


def statement_expressions(st) -> List:
    if isinstance(st, Assign):
        return [st.rhs]
    if isinstance(st, Store):
        return [st.addr, st.value]
    if isinstance(st, Phi):
        return [choice.rhs for choice in st.choices]
    if isinstance(st, Branch):
        return [st.cond] if st.cond is not None else []
    return []


def statement_rw(st) -> ReadWriteSets:
    exprs = statement_expressions(st)
    reads: Set[str] = set()
    for expr in exprs:
        reads |= expression_vars(expr)
    target = getattr(st, "target", None)
    return ReadWriteSets(
        reads=frozenset(reads),
        writes=frozenset({target} if target else ()),
        mem_reads=any(expression_loads(expr) for expr in exprs),
        mem_writes=isinstance(st, Store),
    )


def read_set(step: SchedulingStep) -> ReadWriteSets:
    """Syntactic read/write sets of a whole scheduling step."""
    result = ReadWriteSets()
    for st in step.statements():
        result = result | statement_rw(st)
    return result


def write_set(step: SchedulingStep) -> FrozenSet[str]:
    return read_set(step).writes


def steps_conflict(a: ReadWriteSets, b: ReadWriteSets) -> Optional[str]:
    """
    Name the resource that makes a and b order-dependent, or None if they commute.

    Two loads never conflict; a store conflicts with any memory access.
    """
    for name in sorted(a.writes & (b.reads | b.writes)):
        return name
    for name in sorted(b.writes & a.reads):
        return name
    if (a.mem_writes and b.touches_memory) or (b.mem_writes and a.touches_memory):
        return MEMORY
    return None


def fresh_shadow_name(base: str, taken: Iterable[str]) -> str:
    name = base + SHADOW_SUFFIX
    if name in set(taken):
        raise NameCollision(name)
    return name


def variables_of(steps: Iterable[SchedulingStep]) -> Set[str]:
    names: Set[str] = set()
    for step in steps:
        rw = read_set(step)
        names |= rw.reads | rw.writes
    return names


def pointer_names(steps: Iterable[SchedulingStep]) -> Set[str]:
    names: Set[str] = set()
    for step in steps:
        for st in step.statements():
            for expr in statement_expressions(st):
                names |= expression_pointers(expr)
    return names


def live_in_variables(steps: Iterable[SchedulingStep], entry_label: Optional[str] = None) -> List[str]:
    """
    Variables read before any write when the steps run once in order.

    A phi only reads the choice taken on loop entry (the one whose predecessor
    is ``entry_label``); the back-edge choice is produced by the loop itself.
    """
    defined: Set[str] = set()
    live: List[str] = []
    for step in steps:
        for micro in step.microsteps:
            for st in micro.statements:
                if isinstance(st, Phi):
                    taken = [c for c in st.choices if c.pred == entry_label] or list(st.choices)
                    reads: Set[str] = set()
                    for choice in taken:
                        reads |= expression_vars(choice.rhs)
                else:
                    reads = set(statement_rw(st).reads)
                for name in sorted(reads - defined):
                    if name not in live:
                        live.append(name)
                if getattr(st, "target", None):
                    defined.add(st.target)
    return live
