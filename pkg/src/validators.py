# validators.py
from typing import List, Optional

from pydantic import BaseModel

from core import SHADOW_SUFFIX
from ir import Branch, Ccdfg, Phi, SchedulingStep, is_auxiliary, variables_of

RULES = {
    "structural": "the loop region must contain at least one scheduling step",
    "duplicate-label": "block labels must be unique",
    "nested-loop": "no nested loop",
    "single-entry-exit": "only one Entry and one Exit block",
    "no-branching": "no branching between the scheduling steps",
    "phi-placement": "phi statements belong to the first loop step and merge Entry with the back edge",
    "reserved-name": f"source variables may not end with {SHADOW_SUFFIX!r}",
}


class Diagnostic(BaseModel):
    rule: str
    step: Optional[str] = None
    message: str

    def __str__(self) -> str:
        where = f" [{self.step}]" if self.step else ""
        return f"{self.rule}{where}: {self.message}"


def _diag(rule: str, step: Optional[str], detail: str = "") -> Diagnostic:
    message = RULES[rule] + (f" ({detail})" if detail else "")
    return Diagnostic(rule=rule, step=step, message=message)


def _branches(step: SchedulingStep) -> List[Branch]:
    return [st for st in step.statements() if isinstance(st, Branch)]


def validate_pipelinable(c: Ccdfg) -> List[Diagnostic]:
    """
    Check the pipelinable-loop restrictions on a sequential design.
    Returns a list of diagnostics. If it is empty, the loop is pipelinable.
    """
    errors: List[Diagnostic] = []

    if not c.loop:
        errors.append(_diag("structural", None, "empty loop"))

    seen = set()
    for step in c.steps():
        if step.label in seen:
            errors.append(_diag("duplicate-label", step.label))
        seen.add(step.label)

    loop_labels = [step.label for step in c.loop]
    for index, step in enumerate(c.loop):
        for br in _branches(step):
            backward = [t for t in br.targets if t in loop_labels[: index + 1]]
            if backward:
                errors.append(_diag("nested-loop", step.label, f"branch back to {backward[0]}"))
            else:
                errors.append(_diag("no-branching", step.label, f"branch to {', '.join(br.targets)}"))

    for step in (*c.pre, *c.post):
        if _branches(step):
            errors.append(_diag("single-entry-exit", step.label, "branch outside the loop"))

    entry_label = c.pre[-1].label if c.pre else None
    back_label = c.loop[-1].label if c.loop else None
    for region, steps in (("pre", c.pre), ("loop", c.loop), ("post", c.post)):
        for index, step in enumerate(steps):
            for st in step.statements():
                if not isinstance(st, Phi):
                    continue
                if region != "loop" or index != 0:
                    errors.append(_diag("phi-placement", step.label, f"phi for {st.target} outside the first loop step"))
                elif entry_label is None:
                    errors.append(_diag("phi-placement", step.label, "phi without an Entry block"))
                elif sorted(st.preds) != sorted([entry_label, back_label]):
                    errors.append(_diag(
                        "phi-placement", step.label,
                        f"phi for {st.target} merges {st.preds}, expected {entry_label} and {back_label}",
                    ))

    for name in sorted(variables_of(c.steps())):
        if is_auxiliary(name):
            errors.append(_diag("reserved-name", None, name))

    return errors
