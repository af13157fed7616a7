"""
Dynamic checkers for pipelined designs.

Both checkers co-execute a pipelined design and its phi-eliminated sequential
source from the same initial state and compare the normalized final states:

* check_correctness: the whole pipeline for k full stages against
  k - 1 + ceil(m / interval) sequential iterations;
* check_invariant: the prologue plus k full stages against k - 1 sequential
  iterations followed by the partially executed iterations still in flight.
"""
import random
from math import ceil
from typing import Callable, Iterable, List, Literal, Optional, Sequence

import pandas as pd
from pydantic import BaseModel

from core import DEFAULT_MEMORY_WORDS, VALUE_WIDTH
from errors import CcdfgError, InvalidParams, PreconditionViolation
from interp import (
    CcdfgState, ExecContext, execute_statement, prefix, run_block_set, run_blocks_iters,
    run_ccdfg, run_ccdfg_k,
)
from ir import (
    Microstep, Phi, PipelinedCcdfg, SchedulingStep, is_auxiliary, live_in_variables,
    pointer_names, statement_rw, steps_conflict,
)
from logger import logger

CheckMode = Literal["correctness", "invariant"]


class Divergence(BaseModel):
    location: str
    lhs: Optional[int] = None
    rhs: Optional[int] = None


class CheckReport(BaseModel):
    k: int
    seed: int = 0
    mode: CheckMode = "correctness"
    passed: bool
    lhs_state: Optional[CcdfgState] = None
    rhs_state: Optional[CcdfgState] = None
    first_divergence: Optional[Divergence] = None
    diagnostic: Optional[str] = None

    def to_line(self) -> str:
        line = f"k={self.k} seed={self.seed} mode={self.mode} result={'PASS' if self.passed else 'FAIL'}"
        if self.first_divergence:
            d = self.first_divergence
            line += f" diverges={d.location} lhs={d.lhs} rhs={d.rhs}"
        if self.diagnostic:
            line += f" diagnostic={self.diagnostic}"
        return line


def get_real(s: CcdfgState) -> CcdfgState:
    """Drop the auxiliary (shadow) bindings; memory and pointers are kept."""
    bindings = {name: value for name, value in s.bindings.items() if not is_auxiliary(name)}
    return s.model_copy(update={"bindings": bindings})


def in_order(s: CcdfgState) -> CcdfgState:
    return CcdfgState(
        bindings=dict(sorted(s.bindings.items())),
        memory=dict(sorted(s.memory.items())),
        pointers=dict(sorted(s.pointers.items())),
    )


def get_m_blocks_seq(m: int, loop: Sequence[SchedulingStep], interval: int) -> List[SchedulingStep]:
    """
    Steps of the iterations still in flight after a full stage: the first m
    steps of one iteration, m - interval of the next, and so on.
    """
    if m <= 0 or interval <= 0:
        return []
    if m > len(loop):
        raise InvalidParams(f"cannot take {m} steps of a {len(loop)}-step loop")
    blocks = list(loop[:m])
    if m <= interval:
        return blocks
    return blocks + get_m_blocks_seq(m - interval, loop, interval)


def first_divergence(lhs: CcdfgState, rhs: CcdfgState) -> Optional[Divergence]:
    for name in sorted(set(lhs.bindings) | set(rhs.bindings)):
        if lhs.bindings.get(name) != rhs.bindings.get(name):
            return Divergence(location=name, lhs=lhs.bindings.get(name), rhs=rhs.bindings.get(name))
    for address in sorted(set(lhs.memory) | set(rhs.memory)):
        if lhs.memory.get(address) != rhs.memory.get(address):
            return Divergence(location=f"mem[{address}]", lhs=lhs.memory.get(address), rhs=rhs.memory.get(address))
    for name in sorted(set(lhs.pointers) | set(rhs.pointers)):
        if lhs.pointers.get(name) != rhs.pointers.get(name):
            return Divergence(location=f"ptr[{name}]", lhs=lhs.pointers.get(name), rhs=rhs.pointers.get(name))
    return None


def _report(k: int, seed: int, mode: CheckMode, lhs: CcdfgState, rhs: CcdfgState) -> CheckReport:
    divergence = first_divergence(lhs, rhs)
    passed = divergence is None
    return CheckReport(
        k=k, seed=seed, mode=mode, passed=passed,
        lhs_state=lhs, rhs_state=rhs, first_divergence=divergence,
    )


def _failed(k: int, seed: int, mode: CheckMode, error: CcdfgError) -> CheckReport:
    logger.warning(f"{mode} check k={k} seed={seed} aborted: {error.kind}: {error}")
    return CheckReport(k=k, seed=seed, mode=mode, passed=False, diagnostic=f"{error.kind}: {error}")


def check_invariant(p: PipelinedCcdfg, seq_pre: Sequence[SchedulingStep], seq_loop: Sequence[SchedulingStep],
                    interval: int, m: int, k: int, init: CcdfgState, prev: Optional[str] = None,
                    *, real: Callable[[CcdfgState], CcdfgState] = get_real, seed: int = 0) -> CheckReport:
    """Prologue and k full stages against k - 1 iterations plus the in-flight partial steps."""
    try:
        pp_state = run_ccdfg_k((*p.entry, *p.prologue), p.fullstage, k, init, prev)

        t1 = run_block_set(seq_pre, init, prev)
        loop_prev = prefix(seq_pre) if seq_pre else prev
        t2 = run_blocks_iters(seq_loop, t1, k - 1, loop_prev)
        partial_prev = prefix(seq_loop) if k > 1 else loop_prev
        t3 = run_block_set(get_m_blocks_seq(m, seq_loop, interval), t2, partial_prev)
    except CcdfgError as e:
        return _failed(k, seed, "invariant", e)
    return _report(k, seed, "invariant", in_order(real(pp_state)), in_order(t3))


def check_correctness(p: PipelinedCcdfg, seq_pre: Sequence[SchedulingStep], seq_loop: Sequence[SchedulingStep],
                      interval: int, m: int, k: int, init: CcdfgState, prev: Optional[str] = None,
                      *, real: Callable[[CcdfgState], CcdfgState] = get_real, seed: int = 0) -> CheckReport:
    """Whole pipeline for k full stages against k - 1 + ceil(m / interval) sequential iterations."""
    try:
        if k < 1 or interval < 1:
            raise InvalidParams(f"k and interval must be positive, got k={k} interval={interval}")
        pp_state = run_ccdfg((*p.entry, *p.prologue), p.fullstage, p.epilogue, k, init, prev)
        seq_state = run_ccdfg(seq_pre, seq_loop, (), k - 1 + ceil(m / interval), init, prev)
    except CcdfgError as e:
        return _failed(k, seed, "correctness", e)
    return _report(k, seed, "correctness", in_order(real(pp_state)), in_order(seq_state))


def random_state(steps: Iterable[SchedulingStep], entry_label: Optional[str], rng: random.Random,
                 memory_words: int = DEFAULT_MEMORY_WORDS) -> CcdfgState:
    """
    Random bindings for the live-in variables and random memory contents.

    Every pointer gets its own region of ``memory_words`` words, in name order.
    """
    steps = list(steps)
    limit = 1 << VALUE_WIDTH
    bindings = {name: rng.randrange(limit) for name in live_in_variables(steps, entry_label)}
    pointers = {name: index * memory_words for index, name in enumerate(sorted(pointer_names(steps)))}
    regions = max(1, len(pointers))
    memory = {address: rng.randrange(limit) for address in range(regions * memory_words)}
    return CcdfgState(bindings=bindings, memory=memory, pointers=pointers)


def _as_step(label: str, st) -> SchedulingStep:
    return SchedulingStep(label=label, microsteps=(Microstep(statements=(st,)),))


def _outcome(statements, s: CcdfgState):
    try:
        for st in statements:
            s = execute_statement(st, s, ExecContext())
    except CcdfgError as e:
        return e.kind
    return in_order(s)


def check_commutability(a, b, samples: int, seed: int, memory_words: int = DEFAULT_MEMORY_WORDS) -> bool:
    """Run a;b and b;a from ``samples`` seeded random states and compare."""
    for st in (a, b):
        if isinstance(st, Phi):
            raise PreconditionViolation("phi statements depend on the incoming block")
    rw_a, rw_b = statement_rw(a), statement_rw(b)
    conflict = steps_conflict(rw_a, rw_b)
    if conflict:
        raise PreconditionViolation(f"statements are not independent: both touch {conflict}")
    if rw_a.touches_memory and rw_b.touches_memory:
        raise PreconditionViolation("statements are not independent: both access memory")
    if samples < 1:
        raise InvalidParams(f"samples must be positive, got {samples}")

    rng = random.Random(seed)
    steps = [_as_step("a", a), _as_step("b", b)]
    for _ in range(samples):
        state = random_state(steps, None, rng, memory_words)
        if _outcome((a, b), state) != _outcome((b, a), state):
            return False
    return True


def sweep(result, mode: CheckMode, k_max: int, samples: int, seed: int,
          memory_words: int = DEFAULT_MEMORY_WORDS, pipelined: Optional[PipelinedCcdfg] = None) -> List[CheckReport]:
    """
    Run one checker for k = 1..k_max over ``samples`` random initial states.

    ``result`` is a PipelineResult; ``pipelined`` replaces its pipelined
    design (a hand-edited or mutated pipeline checked against the same source).
    Sample n uses the seed ``seed + n``. Reports are ordered by (k, seed).

    Pointer regions hold at least one word per source iteration the largest
    k completes, so a loop indexing memory by its iteration count stays mapped.
    """
    if k_max < 1 or samples < 1:
        raise InvalidParams(f"k_max and samples must be positive, got {k_max} and {samples}")
    p = pipelined or result.pipelined
    seq = result.sequential
    params = result.params
    check = check_invariant if mode == "invariant" else check_correctness
    words = max(memory_words, k_max + params.seq_offset)
    if words > memory_words:
        logger.debug(f"Growing pointer regions from {memory_words} to {words} words")

    logger.info(f"Sweeping {mode} for k=1..{k_max} over {samples} samples from seed {seed}")
    reports = []
    for k in range(1, k_max + 1):
        for n in range(samples):
            init = random_state(seq.steps(), None, random.Random(seed + n), words)
            reports.append(check(p, seq.pre, seq.loop, params.interval, params.m, k, init, seed=seed + n))
    failures = sum(1 for r in reports if not r.passed)
    if failures:
        logger.warning(f"{failures} of {len(reports)} {mode} checks failed")
    return sorted(reports, key=lambda r: (r.k, r.seed))


def zero_state(steps: Iterable[SchedulingStep], entry_label: Optional[str],
               memory_words: int = DEFAULT_MEMORY_WORDS) -> CcdfgState:
    """Same layout as random_state with every binding and memory word set to 0."""
    steps = list(steps)
    pointers = {name: index * memory_words for index, name in enumerate(sorted(pointer_names(steps)))}
    regions = max(1, len(pointers))
    return CcdfgState(
        bindings={name: 0 for name in live_in_variables(steps, entry_label)},
        memory={address: 0 for address in range(regions * memory_words)},
        pointers=pointers,
    )


def pass_matrix(reports: Sequence[CheckReport]) -> pd.DataFrame:
    """Passing samples per k: one row per k with the passed and total counts."""
    frame = pd.DataFrame([{"k": r.k, "seed": r.seed, "passed": r.passed} for r in reports])
    if frame.empty:
        return pd.DataFrame(columns=["passed", "total"])
    matrix = frame.groupby("k")["passed"].agg(passed="sum", total="count")
    return matrix.astype(int)
