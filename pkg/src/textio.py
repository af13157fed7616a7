"""
Textual format for CCDFGs (.ccdfg) and initial states (.cstate).

A design file is line oriented::

    ccdfg-format 1
    kind sequential
    meta source fig1
    pre:
      step Entry
        (n (add 0 3))
    loop:
      step X
        (i (phi ((0 Entry) (i' Z))))  (a (phi ((0 Entry) (a' Z))))
        (i' (add i 1))
    ...

Region headers end with ':'; ``step LABEL`` opens a scheduling step; every
following line that starts with '(' is one microstep holding one or more
statement S-expressions. ';' starts a comment. Pipelined designs use the
regions entry / prologue / fullstage / epilogue / exit.
"""
import re
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple, Union

from pydantic import BaseModel, Field, ValidationError, field_validator

from core import VALUE_WIDTH
from errors import CcdfgSyntaxError, RangeError, SemanticError
from interp import CcdfgState
from ir import (
    BINARY_OPS, Assign, BinOp, Branch, Ccdfg, Const, GetElemPtr, Load, Microstep, Phi,
    PhiChoice, PipelinedCcdfg, SchedulingStep, Store, Var, LABEL, is_identifier,
)

FORMAT_HEADER = "ccdfg-format"
FORMAT_VERSION = "1"
SEQUENTIAL_REGIONS = ("pre", "loop", "post")
PIPELINED_REGIONS = ("entry", "prologue", "fullstage", "epilogue", "exit")
MAX_DEPTH = 32
MAX_DIGITS = 40
DIGITS = re.compile(r"[0-9]+\Z")


class CcdfgDocument(BaseModel):
    version: str = FORMAT_VERSION
    design: Union[Ccdfg, PipelinedCcdfg]
    meta: Dict[str, str] = Field(default_factory=dict)

    @field_validator("meta")
    @classmethod
    def _meta_fits_one_line(cls, meta: Dict[str, str]) -> Dict[str, str]:
        # Each entry is written as one "meta KEY VALUE" line
        for key, value in meta.items():
            if not is_identifier(key):
                raise ValueError(f"invalid meta key {key!r}")
            if not value or value != value.strip() or ";" in value or value.splitlines() != [value]:
                raise ValueError(f"meta value for {key!r} must be one non-empty line without ';' or edge spaces")
        return meta

    @property
    def pipelined(self) -> bool:
        return isinstance(self.design, PipelinedCcdfg)


@dataclass(frozen=True)
class Token:
    text: str
    line: int
    column: int


# S-expression reader (one line at a time, iterative so deep nesting cannot blow the stack)

def _read_line(text: str, lineno: int, offset: int) -> List:
    forms: List = []
    stack: List[Tuple[List, Token]] = []
    i = 0
    while i < len(text):
        ch = text[i]
        column = offset + i + 1
        if ch.isspace():
            i += 1
            continue
        if ch == "(":
            if len(stack) >= MAX_DEPTH:
                raise CcdfgSyntaxError("expression nested too deeply", lineno, column, ch)
            stack.append(([], Token(ch, lineno, column)))
            i += 1
            continue
        if ch == ")":
            if not stack:
                raise CcdfgSyntaxError("unbalanced ')'", lineno, column, ch)
            done, _ = stack.pop()
            (stack[-1][0] if stack else forms).append(done)
            i += 1
            continue
        start = i
        while i < len(text) and not text[i].isspace() and text[i] not in "()":
            i += 1
        token = Token(text[start:i], lineno, column)
        if not stack:
            raise CcdfgSyntaxError("statements must be parenthesized", lineno, column, token.text)
        stack[-1][0].append(token)
    if stack:
        _, opener = stack[-1]
        raise CcdfgSyntaxError("list not closed before end of line", opener.line, opener.column, "(")
    return forms


def _position(form) -> Tuple[int, int, str]:
    while isinstance(form, list):
        if not form:
            return 0, 0, "()"
        form = form[0]
    return form.line, form.column, form.text


def _fail(message: str, form) -> CcdfgSyntaxError:
    line, column, token = _position(form)
    return CcdfgSyntaxError(message, line, column, token)


def _number(token: Token) -> int:
    if len(token.text) > MAX_DIGITS:
        raise RangeError(f"line {token.line}: constant {token.text[:12]}... is too large")
    value = int(token.text)
    if value >= 1 << VALUE_WIDTH:
        raise RangeError(f"line {token.line}: constant {value} does not fit in {VALUE_WIDTH} bits")
    return value


def _atom(form):
    if isinstance(form, list):
        raise _fail("expected a variable or a number", form)
    if DIGITS.match(form.text):
        return Const(value=_number(form))
    if is_identifier(form.text):
        return Var(name=form.text)
    raise _fail("invalid operand", form)


def _expression(form):
    if not isinstance(form, list):
        return _atom(form)
    if not form or isinstance(form[0], list):
        raise _fail("expected an operator", form)
    head = form[0].text
    if head in BINARY_OPS:
        if len(form) != 3:
            raise _fail(f"{head} takes two operands", form)
        return BinOp(op=head, lhs=_atom(form[1]), rhs=_atom(form[2]))
    if head == "load":
        if len(form) != 2:
            raise _fail("load takes one address", form)
        return Load(addr=_expression(form[1]))
    if head == "getelementptr":
        if len(form) != 3 or isinstance(form[1], list) or not is_identifier(form[1].text):
            raise _fail("getelementptr takes a pointer name and an offset", form)
        return GetElemPtr(base=form[1].text, offset=_expression(form[2]))
    raise _fail("unknown operator", form)


def _label(form) -> str:
    if isinstance(form, list) or not LABEL.match(form.text):
        raise _fail("expected a block label", form)
    return form.text


def _statement(form):
    if not isinstance(form, list) or not form or isinstance(form[0], list):
        raise _fail("expected a statement", form)
    head = form[0].text
    if head == "store":
        if len(form) != 3:
            raise _fail("store takes an address and a value", form)
        return Store(addr=_expression(form[1]), value=_expression(form[2]))
    if head == "br":
        if len(form) == 2:
            return Branch(targets=(_label(form[1]),))
        if len(form) == 4:
            return Branch(cond=_atom(form[1]), targets=(_label(form[2]), _label(form[3])))
        raise _fail("br takes a label, or a condition and two labels", form)
    if len(form) != 2:
        raise _fail("expected (variable expression)", form)
    if not is_identifier(head):
        raise _fail("invalid assignment target", form)
    rhs = form[1]
    if isinstance(rhs, list) and rhs and not isinstance(rhs[0], list) and rhs[0].text == "phi":
        if len(rhs) != 2 or not isinstance(rhs[1], list):
            raise _fail("phi takes a list of choices", rhs)
        choices = rhs[1]
        if len(choices) != 2:
            line, _, _ = _position(rhs)
            raise SemanticError(f"line {line}: phi for {head!r} requires two choices, got {len(choices)}")
        parsed = []
        for choice in choices:
            if not isinstance(choice, list) or len(choice) != 2:
                raise _fail("phi choice must be (expression label)", choice)
            parsed.append(PhiChoice(rhs=_expression(choice[0]), pred=_label(choice[1])))
        return Phi(target=head, choices=tuple(parsed))
    return Assign(target=head, rhs=_expression(rhs))


def _semantic(line: int, err: ValidationError) -> SemanticError:
    first = err.errors()[0]
    return SemanticError(f"line {line}: {first.get('msg', str(err))}")


class _StepBuilder:
    def __init__(self, label: str, line: int):
        self.label = label
        self.line = line
        self.microsteps: List[Microstep] = []

    def build(self) -> SchedulingStep:
        try:
            return SchedulingStep(label=self.label, microsteps=tuple(self.microsteps))
        except ValidationError as err:
            raise _semantic(self.line, err)


def parse_ccdfg(text: Union[str, bytes]) -> CcdfgDocument:
    """Parse a design file. Raises CcdfgSyntaxError, SemanticError or RangeError."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as err:
            raise CcdfgSyntaxError(f"input is not valid UTF-8 (byte {err.start})")

    header_seen = False
    kind: Optional[str] = None
    meta: Dict[str, str] = {}
    regions: Dict[str, List[_StepBuilder]] = {}
    current_region: Optional[str] = None
    current_step: Optional[_StepBuilder] = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split(";", 1)[0]
        stripped = line.strip()
        if not stripped:
            continue
        column = len(line) - len(line.lstrip()) + 1
        words = stripped.split()
        word = words[0]

        if not header_seen:
            if word != FORMAT_HEADER:
                raise CcdfgSyntaxError(f"missing '{FORMAT_HEADER} {FORMAT_VERSION}' header", lineno, column, word)
            if words[1:] != [FORMAT_VERSION]:
                raise CcdfgSyntaxError("unsupported format version", lineno, column, " ".join(words[1:]))
            header_seen = True
            continue

        if word == "kind":
            if kind is not None or regions:
                raise CcdfgSyntaxError("kind must be declared once, before any region", lineno, column, word)
            if len(words) != 2 or words[1] not in ("sequential", "pipelined"):
                raise CcdfgSyntaxError("kind is 'sequential' or 'pipelined'", lineno, column, stripped)
            kind = words[1]
        elif word == "meta":
            parts = stripped.split(None, 2)
            if regions or len(parts) != 3 or not is_identifier(parts[1]):
                raise CcdfgSyntaxError("expected 'meta KEY VALUE' before any region", lineno, column, stripped)
            if parts[1] in meta:
                raise SemanticError(f"line {lineno}: duplicate meta key {parts[1]!r}")
            meta[parts[1]] = parts[2].strip()
        elif len(words) == 1 and word.endswith(":"):
            name = word[:-1]
            allowed = PIPELINED_REGIONS if kind == "pipelined" else SEQUENTIAL_REGIONS
            if name not in allowed:
                raise CcdfgSyntaxError(f"unknown region for a {kind or 'sequential'} design", lineno, column, word)
            if name in regions:
                raise SemanticError(f"line {lineno}: region {name!r} declared twice")
            regions[name] = []
            current_region, current_step = name, None
        elif word == "step":
            if current_region is None:
                raise CcdfgSyntaxError("step outside of a region", lineno, column, word)
            if len(words) != 2 or not LABEL.match(words[1]):
                raise CcdfgSyntaxError("expected 'step LABEL'", lineno, column, stripped)
            current_step = _StepBuilder(words[1], lineno)
            regions[current_region].append(current_step)
        elif stripped.startswith("("):
            if current_step is None:
                raise CcdfgSyntaxError("statement outside of a step", lineno, column, word)
            forms = _read_line(line, lineno, 0)
            try:
                statements = tuple(_statement(form) for form in forms)
                current_step.microsteps.append(Microstep(statements=statements))
            except ValidationError as err:
                raise _semantic(lineno, err)
        else:
            raise CcdfgSyntaxError("unexpected text", lineno, column, word)

    if not header_seen:
        raise CcdfgSyntaxError("empty input")

    built = {name: tuple(builder.build() for builder in steps) for name, steps in regions.items()}
    labels = [step.label for steps in built.values() for step in steps]
    duplicates = sorted({label for label in labels if labels.count(label) > 1})
    if duplicates:
        raise SemanticError(f"duplicate block labels: {', '.join(duplicates)}")

    try:
        if kind == "pipelined":
            design = PipelinedCcdfg(**built)
        else:
            design = Ccdfg(**built)
    except ValidationError as err:
        raise SemanticError(f"invalid design: {err.errors()[0].get('msg')}")
    return CcdfgDocument(version=FORMAT_VERSION, design=design, meta=meta)


# Serialization

def expression_text(e) -> str:
    if isinstance(e, Const):
        return str(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, BinOp):
        return f"({e.op} {expression_text(e.lhs)} {expression_text(e.rhs)})"
    if isinstance(e, Load):
        return f"(load {expression_text(e.addr)})"
    if isinstance(e, GetElemPtr):
        return f"(getelementptr {e.base} {expression_text(e.offset)})"
    raise TypeError(f"not an expression: {e!r}")


def statement_text(st) -> str:
    if isinstance(st, Assign):
        return f"({st.target} {expression_text(st.rhs)})"
    if isinstance(st, Store):
        return f"(store {expression_text(st.addr)} {expression_text(st.value)})"
    if isinstance(st, Phi):
        choices = " ".join(f"({expression_text(c.rhs)} {c.pred})" for c in st.choices)
        return f"({st.target} (phi ({choices})))"
    if isinstance(st, Branch):
        if st.cond is None:
            return f"(br {st.targets[0]})"
        return f"(br {expression_text(st.cond)} {st.targets[0]} {st.targets[1]})"
    raise TypeError(f"not a statement: {st!r}")


def serialize_ccdfg(d: CcdfgDocument) -> str:
    """Canonical text: fixed region order, sorted meta, single spaces, program order kept."""
    lines = [f"{FORMAT_HEADER} {d.version}"]
    pipelined = isinstance(d.design, PipelinedCcdfg)
    lines.append(f"kind {'pipelined' if pipelined else 'sequential'}")
    for key in sorted(d.meta):
        lines.append(f"meta {key} {d.meta[key]}")
    for region in (PIPELINED_REGIONS if pipelined else SEQUENTIAL_REGIONS):
        lines.append(f"{region}:")
        for step in getattr(d.design, region):
            lines.append(f"  step {step.label}")
            for micro in step.microsteps:
                lines.append("    " + " ".join(statement_text(st) for st in micro.statements))
    return "\n".join(lines) + "\n"


# Initial states

STATE_SECTIONS = ("vars", "mem", "ptrs")


def _state_value(text: str, what: str) -> int:
    if not DIGITS.match(text):
        raise CcdfgSyntaxError(f"{what} must be a non-negative integer", token=text)
    if len(text) > MAX_DIGITS or int(text) >= 1 << VALUE_WIDTH:
        raise RangeError(f"{what} {text[:12]} does not fit in {VALUE_WIDTH} bits")
    return int(text)


def parse_state(text: Union[str, bytes]) -> CcdfgState:
    """Parse ``vars: a=0 ; mem: 0=7 ; ptrs: p=0`` (sections may also sit on separate lines)."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as err:
            raise CcdfgSyntaxError(f"input is not valid UTF-8 (byte {err.start})")
    sections: Dict[str, Dict] = {name: {} for name in STATE_SECTIONS}
    section: Optional[str] = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        for token in raw.split("#", 1)[0].replace(";", " ").split():
            if token.endswith(":") and token[:-1] in STATE_SECTIONS:
                section = token[:-1]
                continue
            if section is None:
                raise CcdfgSyntaxError("expected a 'vars:', 'mem:' or 'ptrs:' section", lineno, 0, token)
            key, sep, value = token.partition("=")
            if not sep:
                raise CcdfgSyntaxError("expected KEY=VALUE", lineno, 0, token)
            if section == "mem":
                key = _state_value(key, "address")
            elif not is_identifier(key):
                raise CcdfgSyntaxError("invalid variable name", lineno, 0, key)
            if key in sections[section]:
                raise SemanticError(f"line {lineno}: duplicate {section} entry {key!r}")
            sections[section][key] = _state_value(value, "value")
    return CcdfgState(bindings=sections["vars"], memory=sections["mem"], pointers=sections["ptrs"])


def serialize_state(s: CcdfgState) -> str:
    return "\n".join([
        "vars: " + " ".join(f"{k}={v}" for k, v in s.bindings.items()),
        "mem: " + " ".join(f"{k}={v}" for k, v in s.memory.items()),
        "ptrs: " + " ".join(f"{k}={v}" for k, v in s.pointers.items()),
    ]) + "\n"
