import random

import pytest
from hypothesis import given, settings, strategies as st
from pydantic import ValidationError

from conftest import data_path
from errors import CcdfgError, CcdfgSyntaxError, RangeError, SemanticError
from interp import CcdfgState
from ir import Phi
from synth import pipeline
from textio import CcdfgDocument, parse_ccdfg, parse_state, serialize_ccdfg, serialize_state

CORPUS = ["fig1.ccdfg", "prefix_sum.ccdfg", "xorchain.ccdfg", "hazard.ccdfg", "branching.ccdfg"]

HEADER = "ccdfg-format 1\n"


def read(name):
    with open(data_path(name), encoding="utf-8") as f:
        return f.read()


def test_phi_statement_of_fig1(fig1):
    phi = fig1.loop[0].microsteps[0].statements[0]
    assert isinstance(phi, Phi)
    assert phi.target == "i"
    assert phi.preds == ["Entry", "Z"]


@pytest.mark.parametrize("name", CORPUS)
def test_corpus_round_trip(name):
    document = parse_ccdfg(read(name))
    document = document.model_copy(update={"meta": {**document.meta, "note": "two  spaces, a\ttab (and parens)"}})
    text = serialize_ccdfg(document)
    assert parse_ccdfg(text) == document
    # Canonical text is a fixed point
    assert serialize_ccdfg(parse_ccdfg(text)) == text


@pytest.mark.parametrize("meta", [
    {"source": "a;b"},
    {"source": " padded "},
    {"source": "two\nlines"},
    {"source": ""},
    {"two words": "x"},
])
def test_meta_that_cannot_round_trip_is_rejected(fig1, meta):
    with pytest.raises(ValidationError):
        CcdfgDocument(design=fig1, meta=meta)


def test_pipelined_document_round_trip(fig1):
    result = pipeline(fig1, 1)
    document = CcdfgDocument(design=result.pipelined, meta={"interval": "1", "m": "2"})
    parsed = parse_ccdfg(serialize_ccdfg(document))
    assert parsed.pipelined
    assert parsed == document


def test_bytes_input():
    assert parse_ccdfg(read("fig1.ccdfg").encode()) == parse_ccdfg(read("fig1.ccdfg"))


def test_comments_and_meta():
    document = parse_ccdfg(HEADER + "meta source a b c ; trailing\nloop:\n  step X ; first\n    (x (add 1 2))\n")
    assert document.meta == {"source": "a b c"}
    assert document.design.loop[0].label == "X"


def test_missing_header():
    with pytest.raises(CcdfgSyntaxError) as err:
        parse_ccdfg("loop:\n")
    assert err.value.line == 1
    assert err.value.kind == "SyntaxError"


def test_unbalanced_parenthesis_reports_position():
    with pytest.raises(CcdfgSyntaxError) as err:
        parse_ccdfg(HEADER + "loop:\n  step X\n    (x (add 1 2)\n")
    assert err.value.line == 4
    assert err.value.column == 5


def test_phi_needs_two_choices():
    with pytest.raises(SemanticError):
        parse_ccdfg(HEADER + "pre:\n  step E\n    (u 0)\nloop:\n  step X\n    (x (phi ((0 E))))\n")


def test_duplicate_labels_are_semantic_errors():
    with pytest.raises(SemanticError):
        parse_ccdfg(HEADER + "loop:\n  step X\n    (x 1)\n  step X\n    (y 1)\n")


def test_double_write_in_microstep_is_semantic_error():
    with pytest.raises(SemanticError):
        parse_ccdfg(HEADER + "loop:\n  step X\n    (x 1) (x 2)\n")


def test_constant_out_of_range():
    with pytest.raises(RangeError):
        parse_ccdfg(HEADER + "loop:\n  step X\n    (x 4294967296)\n")


def test_non_utf8_bytes():
    with pytest.raises(CcdfgSyntaxError):
        parse_ccdfg(b"\xff\xfe\x00garbage")


def test_deep_nesting_is_rejected():
    deep = "(load " * 40 + "0" + ")" * 40
    with pytest.raises(CcdfgSyntaxError):
        parse_ccdfg(HEADER + f"loop:\n  step X\n    (x {deep})\n")


def test_state_file(fig1_state):
    assert fig1_state.bindings == {}
    assert fig1_state.memory[0] == 5
    assert fig1_state.pointers == {"A": 0, "B": 16}


def test_state_round_trip():
    s = CcdfgState(bindings={"b": 1, "a": 2}, memory={3: 4}, pointers={"p": 0})
    assert parse_state(serialize_state(s)) == s


def test_state_errors():
    with pytest.raises(CcdfgSyntaxError):
        parse_state("a=1")
    with pytest.raises(SemanticError):
        parse_state("vars: a=1 a=2")
    with pytest.raises(RangeError):
        parse_state("vars: a=4294967296")
    with pytest.raises(CcdfgSyntaxError):
        parse_state("vars: a=-1")


ALPHABET = "()abxyz019 ;:\n'_.phistorelad-+"


def test_parser_is_total_on_random_input():
    # 10,000 seeded random inputs: every failure is one of our own errors
    rng = random.Random(1234)
    fragments = ["(", ")", "phi", "load", "store", "br", "step X", "loop:", "pre:", "(x (add 1 2))", "\n"]
    for _ in range(10_000):
        if rng.random() < 0.5:
            body = "".join(rng.choice(ALPHABET) for _ in range(rng.randrange(60)))
        else:
            body = " ".join(rng.choice(fragments) for _ in range(rng.randrange(12)))
        text = (HEADER if rng.random() < 0.7 else "") + body
        try:
            parse_ccdfg(text)
        except CcdfgError:
            pass


@settings(max_examples=200, deadline=None)
@given(st.binary(max_size=200))
def test_parser_is_total_on_bytes(blob):
    try:
        parse_ccdfg(blob)
    except CcdfgError:
        pass
