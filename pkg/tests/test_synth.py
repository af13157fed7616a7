import random
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from core import SHADOW_SUFFIX
from equiv import get_real, random_state
from errors import HazardConflict, InvalidParams, NameCollision, NotPipelinable
from interp import CcdfgState, run_blocks_iters, run_ccdfg
from ir import Assign, Phi, Var, is_auxiliary, read_set, statement_rw, write_set
from synth import (
    PipelineParams, compute_m, phi_elimination, pipeline, rename_reads, shadow_insertion, superstep_construction,
)
from validators import validate_pipelinable

from helpers import assign, random_design, step


def labels(steps):
    return [s.label for s in steps]


def test_compute_m():
    assert compute_m(3, 1) == 2
    assert compute_m(4, 3) == 1
    with pytest.raises(InvalidParams):
        compute_m(3, 3)
    with pytest.raises(InvalidParams):
        compute_m(3, 0)


def test_params_consistency():
    assert PipelineParams(interval=1, m=2, depth=3, loop_len=3).seq_offset == 2
    with pytest.raises(ValueError):
        PipelineParams(interval=4, m=2, depth=1, loop_len=3)


def test_phi_elimination_fig1(fig1):
    c = phi_elimination(fig1)
    assert labels(c.pre) == ["Entry", "X.first", "Y.first", "Z.first"]
    assert labels(c.loop) == ["X", "Y", "Z"]
    first_i = c.pre[1].microsteps[0].statements[0]
    loop_i = c.loop[0].microsteps[0].statements[0]
    assert first_i == Assign(target="i", rhs=fig1.loop[0].microsteps[0].statements[0].choices[0].rhs)
    assert loop_i == Assign(target="i", rhs=Var(name="i'"))
    assert not any(isinstance(st, Phi) for s in c.steps() for st in s.statements())


def test_phi_elimination_is_one_unrolled_iteration(fig1, fig1_state):
    from interp import run_ccdfg
    c = phi_elimination(fig1)
    expected = run_ccdfg(fig1.pre, fig1.loop, fig1.post, 3, fig1_state)
    assert run_ccdfg(c.pre, c.loop, c.post, 2, fig1_state) == expected


def test_phi_elimination_rejects_branching(branching):
    with pytest.raises(NotPipelinable) as err:
        phi_elimination(branching)
    assert err.value.to_dict()["diagnostics"][0]["rule"] == "no-branching"


def _four_steps():
    return [
        step("A", [assign("u", "add", "u", 1)]),
        step("B", [assign("x", "add", "u", 2)]),
        step("C", [assign("y", "add", "x", 3)]),
        step("D", [assign("z", "xor", "x", "y")]),
    ]


def test_shadow_insertion_renames_far_reads():
    loop = shadow_insertion(_four_steps(), 1)
    assert "x_reg" in write_set(loop[2])
    assert read_set(loop[3]).reads == {"x_reg", "y"}
    # The copy is appended after the step's own statements
    assert loop[2].microsteps[-1].statements == (Assign(target="x_reg", rhs=Var(name="x")),)


def test_shadow_insertion_chains_copies():
    steps = [
        step("A", [assign("x", "add", "u", 1)]),
        step("B", [assign("p", "add", 1, 1)]),
        step("C", [assign("q", "add", 1, 1)]),
        step("D", [assign("z", "add", "x", 1)]),
    ]
    loop = shadow_insertion(steps, 1)
    assert "x_reg" in write_set(loop[1])
    assert "x_reg_reg" in write_set(loop[2])
    assert read_set(loop[3]).reads == {"x_reg_reg"}


def test_shadow_insertion_preserves_semantics():
    original = _four_steps()
    shadowed = shadow_insertion(original, 1)
    init = CcdfgState(bindings={"u": 5})
    lhs = run_blocks_iters(original, init, 3, None)
    rhs = run_blocks_iters(shadowed, init, 3, None)
    assert get_real(rhs) == lhs


def test_shadow_insertion_without_far_reads_is_identity(fig1):
    c = phi_elimination(fig1)
    assert shadow_insertion(c.loop, 2) == list(c.loop)
    assert shadow_insertion(_four_steps(), 3) == _four_steps()


def test_shadow_insertion_name_collision():
    with pytest.raises(NameCollision):
        shadow_insertion(_four_steps(), 1, taken={"x_reg"})


def test_fig1_interval_1(fig1):
    result = pipeline(fig1, 1)
    p = result.pipelined
    assert (result.params.m, result.params.depth) == (2, 3)
    assert labels(p.entry) == ["Entry"]
    assert labels(p.prologue) == ["X@1", "Y@1+X@2"]
    assert labels(p.fullstage) == ["Z@1+Y@2+X@3"]
    assert labels(p.epilogue) == ["Z@2+Y@3", "Z@3"]
    assert labels(p.exit) == ["Exit"]
    # Z reads i two steps after X wrote it
    assert "i_reg" in read_set(p.fullstage[0]).reads


def test_sequential_side_is_shadow_free(fig1):
    result = pipeline(fig1, 1)
    assert result.sequential == phi_elimination(fig1)


def test_hazard_at_interval_1(hazard):
    with pytest.raises(HazardConflict) as err:
        pipeline(hazard, 1)
    assert (err.value.writer_step, err.value.reader_step, err.value.var) == ("Z", "X", "v")
    assert err.value.to_dict()["kind"] == "HazardConflict"


def test_memory_hazard_is_reported_by_variable(prefix_sum):
    with pytest.raises(HazardConflict) as err:
        pipeline(prefix_sum, 1)
    assert err.value.var == "acc'"


def test_interval_equal_to_loop_length_is_degenerate(hazard):
    result = pipeline(hazard, 3)
    p = result.pipelined
    assert (result.params.m, result.params.depth) == (3, 1)
    assert labels(p.prologue) == ["X@1", "Y@1", "Z@1"]
    assert labels(p.fullstage) == ["X@2", "Y@2", "Z@2"]
    assert p.epilogue == ()
    assert [s.microsteps for s in p.fullstage] == [s.microsteps for s in result.sequential.loop]


def test_prefix_sum_interval_2(prefix_sum):
    p = pipeline(prefix_sum, 2).pipelined
    assert labels(p.prologue) == ["Fetch@1"]
    assert labels(p.fullstage) == ["Add@1", "Write@1+Fetch@2"]
    assert labels(p.epilogue) == ["Add@2", "Write@2"]


def test_xorchain_double_shadow(xorchain):
    result = pipeline(xorchain, 1)
    p = result.pipelined
    assert (result.params.m, result.params.depth) == (3, 4)
    assert labels(p.fullstage) == ["S3@1+S2@2+S1@3+S0@4"]
    assert len(p.epilogue) == 3
    assert "x_reg_reg" in read_set(p.fullstage[0]).reads


def test_interval_out_of_range(fig1, branching):
    with pytest.raises(InvalidParams):
        pipeline(fig1, 0)
    with pytest.raises(InvalidParams):
        pipeline(fig1, 4)
    with pytest.raises(NotPipelinable):
        pipeline(branching, 1)


def test_superstep_construction_checks_m(fig1):
    c = phi_elimination(fig1)
    with pytest.raises(InvalidParams):
        superstep_construction(c.pre, c.loop, 1, 1)
    with pytest.raises(InvalidParams):
        superstep_construction(c.pre, c.loop, 1, 4)
    with pytest.raises(InvalidParams):
        superstep_construction(c.pre, (), 1, 1)


def test_superstep_construction_without_first_variant(hazard):
    c = phi_elimination(hazard)
    p = superstep_construction(c.pre, c.loop, 2, 1)
    assert labels(p.prologue) == ["X@1"]
    assert labels(p.fullstage) == ["Y@1", "Z@1+X@2"]


# Random straight-line loop bodies: shadowing never changes what the original variables compute

NAMES = ["a", "b", "c", "d"]

statements = st.builds(
    lambda target, op, lhs, rhs: assign(target, op, lhs, rhs),
    st.sampled_from(NAMES),
    st.sampled_from(["add", "xor", "mul", "sub"]),
    st.one_of(st.sampled_from(NAMES), st.integers(0, 9)),
    st.one_of(st.sampled_from(NAMES), st.integers(0, 9)),
)


@settings(max_examples=150, deadline=None)
@given(st.lists(statements, min_size=2, max_size=7), st.integers(1, 6), st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_shadow_insertion_property(body, interval, iterations, seed):
    loop = [step(f"S{n}", [s]) for n, s in enumerate(body)]
    rng = random.Random(seed)
    init = CcdfgState(bindings={name: rng.randrange(1 << 32) for name in NAMES})
    shadowed = shadow_insertion(loop, interval)
    assert get_real(run_blocks_iters(shadowed, init, iterations, None)) == run_blocks_iters(loop, init, iterations, None)


@pytest.mark.parametrize("design", ["fig1", "prefix_sum", "xorchain", "hazard"])
@pytest.mark.parametrize("n", range(1, 9))
def test_phi_elimination_moves_one_iteration_into_pre(request, design, n):
    c = request.getfixturevalue(design)
    eliminated = phi_elimination(c)
    assert not any(isinstance(stmt, Phi) for s in eliminated.steps() for stmt in s.statements())
    init = random_state(c.steps(), "Entry", random.Random(n), 16)
    lhs = run_ccdfg(c.pre, c.loop, c.post, n, init)
    rhs = run_ccdfg(eliminated.pre, eliminated.loop, eliminated.post, n - 1, init)
    common = set(lhs.bindings) & set(rhs.bindings)
    assert {name: lhs.bindings[name] for name in common} == {name: rhs.bindings[name] for name in common}
    assert lhs.memory == rhs.memory


# Statement conservation: with k = 1 the supersteps hold every statement of
# 1 + ceil(m / interval) iterations exactly once, shadow copies aside

def _source_name(name: str) -> str:
    while is_auxiliary(name):
        name = name[: -len(SHADOW_SUFFIX)]
    return name


def _pipelined_statements(p) -> Counter:
    statements = [stmt for s in (*p.prologue, *p.fullstage, *p.epilogue) for stmt in s.statements()]
    names = {name for stmt in statements for name in statement_rw(stmt).reads | statement_rw(stmt).writes}
    mapping = {name: _source_name(name) for name in names if is_auxiliary(name)}
    return Counter(rename_reads(stmt, mapping) for stmt in statements
                   if not (isinstance(stmt, Assign) and is_auxiliary(stmt.target)))


def _iteration_statements(result, source_pre_len: int) -> Counter:
    seq = result.sequential
    first = [stmt for s in seq.pre[source_pre_len:] for stmt in s.statements()]
    body = [stmt for s in seq.loop for stmt in s.statements()]
    return Counter(first + body * result.params.seq_offset)


@pytest.mark.parametrize("design,interval", [
    ("fig1", 1), ("fig1", 2), ("fig1", 3), ("prefix_sum", 2), ("prefix_sum", 3),
    ("xorchain", 1), ("xorchain", 2), ("hazard", 2), ("hazard", 3),
])
def test_supersteps_conserve_statements(request, design, interval):
    c = request.getfixturevalue(design)
    result = pipeline(c, interval)
    assert _pipelined_statements(result.pipelined) == _iteration_statements(result, len(c.pre))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_generated_pipelines_conserve_statements(seed):
    c = random_design(random.Random(seed))
    assert validate_pipelinable(c) == []
    for interval in range(1, len(c.loop) + 1):
        try:
            result = pipeline(c, interval)
        except HazardConflict:
            continue
        assert _pipelined_statements(result.pipelined) == _iteration_statements(result, len(c.pre))
