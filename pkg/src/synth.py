"""
Reference loop pipelining.

pipeline() chains the passes: validation, phi elimination (the loop is unwound
once so that phi statements become plain assignments), shadow-variable
insertion, then superstep construction. Superstep construction lays the loop
iterations out as a matrix where iteration j starts at cycle (j - 1) * interval
and combines each cycle column into one superstep, older iterations first.
It fails instead of emitting a pipeline whenever that row-wise order would
invert two dependent step instances of the sequential order.
"""
from collections import defaultdict
from math import ceil
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from errors import HazardConflict, InvalidParams, NameCollision, NotPipelinable
from interp import prefix
from ir import (
    Assign, BinOp, Branch, Ccdfg, GetElemPtr, Load, Microstep, Phi, PhiChoice,
    PipelinedCcdfg, SchedulingStep, Store, Var, fresh_shadow_name, read_set,
    steps_conflict, variables_of, write_set,
)
from logger import logger
from validators import validate_pipelinable

FIRST_ITERATION_SUFFIX = ".first"


class PipelineParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    interval: int = Field(gt=0)
    m: int = Field(gt=0)
    depth: int = Field(gt=0)
    loop_len: int = Field(gt=0)

    @model_validator(mode="after")
    def _consistent(self) -> "PipelineParams":
        if self.interval > self.loop_len:
            raise ValueError(f"interval {self.interval} exceeds loop length {self.loop_len}")
        if not self.loop_len - self.interval <= self.m <= self.loop_len:
            raise ValueError(f"m={self.m} outside [{self.loop_len - self.interval}, {self.loop_len}]")
        return self

    @property
    def seq_offset(self) -> int:
        """ceil(m / interval): extra sequential iterations the pipeline completes beyond k - 1."""
        return ceil(self.m / self.interval)


class PipelineResult(BaseModel):
    pipelined: PipelinedCcdfg
    params: PipelineParams
    # Phi-eliminated, shadow-free source: what the checkers execute sequentially
    sequential: Ccdfg


# Phi elimination

def _phi_to_assign(st, pred: str):
    if isinstance(st, Phi):
        rhs = next(choice.rhs for choice in st.choices if choice.pred == pred)
        return Assign(target=st.target, rhs=rhs)
    return st


def _resolve_phis(step: SchedulingStep, pred: str, label: Optional[str] = None) -> SchedulingStep:
    microsteps = tuple(
        Microstep(statements=tuple(_phi_to_assign(st, pred) for st in micro.statements))
        for micro in step.microsteps
    )
    return SchedulingStep(label=label or step.label, microsteps=microsteps)


def phi_elimination(c: Ccdfg) -> Ccdfg:
    """
    Unwind the loop once: the copy appended to pre takes every phi's Entry
    choice, the remaining loop body takes its back-edge choice.
    """
    diagnostics = validate_pipelinable(c)
    if diagnostics:
        raise NotPipelinable(diagnostics)

    entry = prefix(c.pre) if c.pre else None
    back = prefix(c.loop)
    labels = {step.label for step in c.steps()}

    preamble = []
    for step in c.loop:
        label = step.label + FIRST_ITERATION_SUFFIX
        if label in labels:
            raise NameCollision(label)
        preamble.append(_resolve_phis(step, entry, label))
    body = tuple(_resolve_phis(step, back) for step in c.loop)

    logger.debug(f"Phi elimination unwound {len(preamble)} steps into the preamble")
    return Ccdfg(pre=(*c.pre, *preamble), loop=body, post=c.post)


# Shadow variables

def _rename_expr(e, mapping: Dict[str, str]):
    if isinstance(e, Var):
        return Var(name=mapping[e.name]) if e.name in mapping else e
    if isinstance(e, BinOp):
        return e.model_copy(update={"lhs": _rename_expr(e.lhs, mapping), "rhs": _rename_expr(e.rhs, mapping)})
    if isinstance(e, Load):
        return e.model_copy(update={"addr": _rename_expr(e.addr, mapping)})
    if isinstance(e, GetElemPtr):
        return e.model_copy(update={"offset": _rename_expr(e.offset, mapping)})
    return e


def rename_reads(st, mapping: Dict[str, str]):
    """Rewrite the variables a statement reads; its target is left alone."""
    if not mapping:
        return st
    if isinstance(st, Assign):
        return st.model_copy(update={"rhs": _rename_expr(st.rhs, mapping)})
    if isinstance(st, Store):
        return st.model_copy(update={"addr": _rename_expr(st.addr, mapping),
                                     "value": _rename_expr(st.value, mapping)})
    if isinstance(st, Phi):
        choices = tuple(PhiChoice(rhs=_rename_expr(c.rhs, mapping), pred=c.pred) for c in st.choices)
        return st.model_copy(update={"choices": choices})
    if isinstance(st, Branch) and st.cond is not None:
        return st.model_copy(update={"cond": _rename_expr(st.cond, mapping)})
    return st


def shadow_insertion(loop: Sequence[SchedulingStep], interval: int,
                     taken: Optional[Iterable[str]] = None) -> List[SchedulingStep]:
    """
    Protect values written in one step and read more than ``interval`` steps later.

    The write is copied into x_reg ``interval`` steps after it, x_reg into
    x_reg_reg another interval later, and so on until every read can use a
    copy made at most one interval before it. Only variables written by a
    single step are shadowed.
    """
    if interval < 1:
        raise InvalidParams(f"interval must be positive, got {interval}")
    steps = list(loop)
    taken = set(taken or ()) | variables_of(steps)

    writers: Dict[str, List[int]] = defaultdict(list)
    for index, step in enumerate(steps):
        for name in write_set(step):
            writers[name].append(index)

    renames: Dict[int, Dict[str, str]] = defaultdict(dict)
    copies: Dict[int, List[Assign]] = defaultdict(list)
    for name in sorted(writers):
        if len(writers[name]) != 1:
            continue
        w = writers[name][0]
        far = [r for r in range(w + 1, len(steps))
               if r - w > interval and name in read_set(steps[r]).reads]
        if not far:
            continue
        holders = [name]
        for q in range(1, max(ceil((r - w) / interval) for r in far)):
            shadow = fresh_shadow_name(holders[-1], taken)
            taken.add(shadow)
            copies[w + q * interval].append(Assign(target=shadow, rhs=Var(name=holders[-1])))
            holders.append(shadow)
        for r in far:
            renames[r][name] = holders[ceil((r - w) / interval) - 1]
        logger.debug(f"Shadowed {name} with {holders[1:]}")

    result = []
    for index, step in enumerate(steps):
        if index not in renames and index not in copies:
            result.append(step)
            continue
        microsteps = [
            Microstep(statements=tuple(rename_reads(st, renames.get(index, {})) for st in micro.statements))
            for micro in step.microsteps
        ]
        if copies.get(index):
            microsteps.append(Microstep(statements=tuple(copies[index])))
        result.append(SchedulingStep(label=step.label, microsteps=tuple(microsteps)))
    return result


# Superstep construction

def compute_m(loop_len: int, interval: int) -> int:
    """Scheduling steps of the first iteration that run in the prologue."""
    if interval < 1 or interval >= loop_len:
        raise InvalidParams(f"interval {interval} must be in [1, {loop_len - 1}] for a {loop_len}-step loop")
    return loop_len - interval


def _check_hazards(loop: Sequence[SchedulingStep], first: Sequence[SchedulingStep], interval: int) -> None:
    # Step s1 of iteration j lands at or before step s2 of iteration j + d
    # iff s1 - s2 <= d * interval; d = 1 is the binding case.
    rw = [read_set(loop[s]) | read_set(first[s]) for s in range(len(loop))]
    for s1 in range(len(loop)):
        for s2 in range(len(loop)):
            if s1 - s2 <= interval:
                continue
            conflict = steps_conflict(rw[s1], rw[s2])
            if conflict:
                logger.warning(f"Hazard: {loop[s1].label} (older) vs {loop[s2].label} (younger) on {conflict}")
                raise HazardConflict(loop[s1].label, loop[s2].label, conflict)


def _superstep(cycle: int, loop, first, interval: int, iterations: int) -> SchedulingStep:
    parts: List[Tuple[int, int]] = []
    for j in range(1, iterations + 1):
        s = cycle - (j - 1) * interval
        if 0 <= s < len(loop):
            parts.append((j, s))
    microsteps = []
    for j, s in parts:
        source = first[s] if j == 1 else loop[s]
        microsteps.extend(source.microsteps)
    label = "+".join(f"{loop[s].label}@{j}" for j, s in parts)
    return SchedulingStep(label=label, microsteps=tuple(microsteps))


def superstep_construction(pre: Sequence[SchedulingStep], loop: Sequence[SchedulingStep], interval: int, m: int,
                           *, first: Optional[Sequence[SchedulingStep]] = None,
                           post: Sequence[SchedulingStep] = ()) -> PipelinedCcdfg:
    """
    Build G_p (cycles [0, m)), G_l (cycles [m, m + interval)) and G_e (drain)
    from the iteration matrix. ``first`` is the unwound first iteration; it
    may only differ from ``loop`` in the steps the prologue covers.
    """
    loop = list(loop)
    first = list(first) if first is not None else loop
    length = len(loop)
    if length == 0:
        raise InvalidParams("loop region is empty")
    if not 1 <= interval <= length:
        raise InvalidParams(f"interval {interval} must be in [1, {length}]")
    if not max(1, length - interval) <= m <= length:
        raise InvalidParams(f"m={m} must be in [{max(1, length - interval)}, {length}] for interval {interval}")
    if len(first) != length:
        raise InvalidParams("first iteration and loop body differ in length")
    for s in range(m, length):
        if first[s].microsteps != loop[s].microsteps:
            raise InvalidParams(f"first iteration differs from the loop body at step {loop[s].label}, past the prologue")

    _check_hazards(loop, first, interval)

    # With k = 1 the matrix holds 1 + ceil(m / interval) iterations; G_l is the same text for every k
    iterations = 1 + ceil(m / interval)
    end = (iterations - 1) * interval + length
    column = lambda c: _superstep(c, loop, first, interval, iterations)  # noqa: E731
    prologue = tuple(column(c) for c in range(0, m))
    fullstage = tuple(column(c) for c in range(m, m + interval))
    epilogue = tuple(column(c) for c in range(m + interval, end))

    outer = {step.label for step in (*pre, *post)}
    for step in (*prologue, *fullstage, *epilogue):
        if step.label in outer:
            raise NameCollision(step.label)

    logger.info(f"Supersteps: prologue={len(prologue)} fullstage={len(fullstage)} epilogue={len(epilogue)}")
    return PipelinedCcdfg(entry=tuple(pre), prologue=prologue, fullstage=fullstage,
                          epilogue=epilogue, exit=tuple(post))


def pipeline(c: Ccdfg, interval: int) -> PipelineResult:
    """Validate, eliminate phis, insert shadows and build supersteps. The first failure is raised as is."""
    logger.info(f"Pipelining a {len(c.loop)}-step loop with interval {interval}")
    diagnostics = validate_pipelinable(c)
    if diagnostics:
        raise NotPipelinable(diagnostics)
    if interval < 1:
        raise InvalidParams(f"interval must be positive, got {interval}")

    sequential = phi_elimination(c)
    length = len(sequential.loop)
    if interval > length:
        raise InvalidParams(f"interval {interval} exceeds the {length}-step loop")
    preamble = sequential.pre[len(c.pre):]

    taken = variables_of(sequential.steps())
    loop = shadow_insertion(sequential.loop, interval, taken)
    first = shadow_insertion(preamble, interval, taken)

    # interval == length: iterations never overlap, the prologue is the whole first iteration
    m = length if interval == length else compute_m(length, interval)
    pipelined = superstep_construction(c.pre, loop, interval, m, first=first, post=c.post)
    params = PipelineParams(interval=interval, m=m, depth=ceil(length / interval), loop_len=length)
    logger.info(f"Pipeline generated: m={m} depth={params.depth}")
    return PipelineResult(pipelined=pipelined, params=params, sequential=sequential)
