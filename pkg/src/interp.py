"""
Executable semantics of CCDFGs.

States are threaded functionally: every operation returns a new CcdfgState.
The previous scheduling step label (prev_bb) is threaded alongside because a
phi statement resolves against the block executed before the current one.
"""
from typing import Dict, List, Optional, Sequence

from pydantic import BaseModel, ConfigDict, Field, model_validator

from core import VALUE_WIDTH
from errors import EmptyRegion, InvalidParams, PhiUndefined, UnboundVariable, UnmappedAddress
from ir import (
    Assign, BinOp, Branch, Const, GetElemPtr, Load, Phi, PipelinedCcdfg,
    SchedulingStep, Store, Var,
)
from logger import logger

MASK = (1 << VALUE_WIDTH) - 1

_OPS = {
    "add": lambda a, b: a + b,
    "sub": lambda a, b: a - b,
    "mul": lambda a, b: a * b,
    "xor": lambda a, b: a ^ b,
    "and": lambda a, b: a & b,
    "or": lambda a, b: a | b,
    "shl": lambda a, b: a << b if b < VALUE_WIDTH else 0,
    "lshr": lambda a, b: a >> b if b < VALUE_WIDTH else 0,
    "eq": lambda a, b: int(a == b),
    "lt": lambda a, b: int(a < b),
}


class CcdfgState(BaseModel):
    """Variable bindings (ordered), memory words and the pointer table."""
    bindings: Dict[str, int] = Field(default_factory=dict)
    memory: Dict[int, int] = Field(default_factory=dict)
    pointers: Dict[str, int] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _within_width(self) -> "CcdfgState":
        for where, values in (("bindings", self.bindings.values()),
                              ("memory", [*self.memory.keys(), *self.memory.values()]),
                              ("pointers", self.pointers.values())):
            for value in values:
                if not 0 <= value <= MASK:
                    raise ValueError(f"{where} value {value} does not fit in {VALUE_WIDTH} bits")
        return self

    def bind(self, name: str, value: int) -> "CcdfgState":
        # Updating keeps the binding's position, a new name is appended
        bindings = dict(self.bindings)
        bindings[name] = value
        return self.model_copy(update={"bindings": bindings})

    def store(self, address: int, value: int) -> "CcdfgState":
        memory = dict(self.memory)
        memory[address] = value
        return self.model_copy(update={"memory": memory})


class ExecContext(BaseModel):
    model_config = ConfigDict(frozen=True)

    prev_bb: Optional[str] = None


class TraceEntry(BaseModel):
    cycle: int
    region: str
    step_label: str
    changed: Dict[str, int]
    post_state: CcdfgState

    def to_line(self) -> str:
        changed = " ".join(f"{k}={v}" for k, v in self.changed.items())
        return f"cycle={self.cycle} region={self.region} label={self.step_label} changed=[{changed}]"


class Trace(BaseModel):
    entries: List[TraceEntry] = Field(default_factory=list)

    def record(self, step: SchedulingStep, region: str, before: CcdfgState, after: CcdfgState) -> None:
        changed = {k: v for k, v in after.bindings.items() if before.bindings.get(k) != v}
        self.entries.append(TraceEntry(
            cycle=len(self.entries) + 1, region=region, step_label=step.label,
            changed=changed, post_state=after,
        ))

    @property
    def latency(self) -> int:
        """Cycles spent outside the Entry/Exit regions."""
        return sum(1 for entry in self.entries if entry.region not in ("pre", "post"))


def evaluate_expr(e, s: CcdfgState) -> int:
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        try:
            return s.bindings[e.name]
        except KeyError:
            raise UnboundVariable(e.name)
    if isinstance(e, BinOp):
        return _OPS[e.op](evaluate_expr(e.lhs, s), evaluate_expr(e.rhs, s)) & MASK
    if isinstance(e, Load):
        address = evaluate_expr(e.addr, s)
        try:
            return s.memory[address]
        except KeyError:
            raise UnmappedAddress(address)
    if isinstance(e, GetElemPtr):
        if e.base not in s.pointers:
            raise UnboundVariable(e.base)
        return (s.pointers[e.base] + evaluate_expr(e.offset, s)) & MASK
    raise TypeError(f"not an expression: {e!r}")


def choose(phi: Phi, prev_bb: Optional[str]):
    for choice in phi.choices:
        if choice.pred == prev_bb:
            return choice.rhs
    raise PhiUndefined(prev_bb, phi.preds)


def execute_statement(st, s: CcdfgState, ctx: ExecContext) -> CcdfgState:
    if isinstance(st, Assign):
        return s.bind(st.target, evaluate_expr(st.rhs, s))
    if isinstance(st, Store):
        return s.store(evaluate_expr(st.addr, s), evaluate_expr(st.value, s))
    if isinstance(st, Phi):
        return s.bind(st.target, evaluate_expr(choose(st, ctx.prev_bb), s))
    if isinstance(st, Branch):
        return s
    raise TypeError(f"not a statement: {st!r}")


def run_block(step: SchedulingStep, s: CcdfgState, ctx: ExecContext,
              trace: Optional[Trace] = None, region: str = "loop") -> CcdfgState:
    before = s
    for micro in step.microsteps:
        for st in micro.statements:
            s = execute_statement(st, s, ctx)
    if trace is not None:
        trace.record(step, region, before, s)
    return s


def run_block_set(blocks: Sequence[SchedulingStep], s: CcdfgState, prev: Optional[str],
                  trace: Optional[Trace] = None, region: str = "pre") -> CcdfgState:
    for block in blocks:
        s = run_block(block, s, ExecContext(prev_bb=prev), trace, region)
        prev = block.label
    return s


def prefix(blocks: Sequence[SchedulingStep]) -> str:
    """Label of the last block of a region: what a phi sees after the region ran."""
    if not blocks:
        raise EmptyRegion()
    return blocks[-1].label


def run_blocks_iters(loop: Sequence[SchedulingStep], s: CcdfgState, iterations: int, prev: Optional[str],
                     trace: Optional[Trace] = None, region: str = "loop") -> CcdfgState:
    if iterations < 0:
        raise InvalidParams(f"iterations must be non-negative, got {iterations}")
    for n in range(iterations):
        s = run_block_set(loop, s, prev if n == 0 else prefix(loop), trace, region)
    return s


def _entry_label(pre: Sequence[SchedulingStep], prev: Optional[str]) -> Optional[str]:
    return prefix(pre) if pre else prev


def run_ccdfg(pre: Sequence[SchedulingStep], loop: Sequence[SchedulingStep], post: Sequence[SchedulingStep],
              iterations: int, init: CcdfgState, prev: Optional[str] = None,
              trace: Optional[Trace] = None) -> CcdfgState:
    """Run the region before the loop, the loop ``iterations`` times, then the region after it."""
    state1 = run_block_set(pre, init, prev, trace, "pre")
    loop_prev = _entry_label(pre, prev)
    state2 = run_blocks_iters(loop, state1, iterations, loop_prev, trace, "loop")
    post_prev = prefix(loop) if iterations > 0 and loop else loop_prev
    return run_block_set(post, state2, post_prev, trace, "post")


def run_ccdfg_k(prologue: Sequence[SchedulingStep], fullstage: Sequence[SchedulingStep], k: int,
                init: CcdfgState, prev: Optional[str] = None, trace: Optional[Trace] = None) -> CcdfgState:
    """Run G_p once and G_l k times: the state poised to execute G_l again."""
    if k < 1:
        raise InvalidParams(f"k must be positive, got {k}")
    state = run_block_set(prologue, init, prev, trace, "prologue")
    return run_blocks_iters(fullstage, state, k, _entry_label(prologue, prev), trace, "fullstage")


def run_pipelined(p: PipelinedCcdfg, k: int, init: CcdfgState, prev: Optional[str] = None,
                  trace: Optional[Trace] = None) -> CcdfgState:
    """Whole pipelined program: entry, prologue, k full stages, epilogue and exit."""
    if k < 1:
        raise InvalidParams(f"k must be positive, got {k}")
    logger.debug(f"Running pipelined design for {k} full stages")
    state = init
    for region, blocks, times in (("pre", p.entry, 1), ("prologue", p.prologue, 1),
                                  ("fullstage", p.fullstage, k), ("epilogue", p.epilogue, 1),
                                  ("post", p.exit, 1)):
        for _ in range(times):
            state = run_block_set(blocks, state, prev, trace, region)
            if blocks:
                prev = prefix(blocks)
    return state
