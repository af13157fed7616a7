import random

from ir import (
    Assign, BinOp, Ccdfg, Const, GetElemPtr, Load, Microstep, Phi, PhiChoice, SchedulingStep, Store, Var,
)

OPS = ["add", "sub", "mul", "xor", "and", "or", "shl", "lshr", "eq", "lt"]


def atom(x):
    return Const(value=x) if isinstance(x, int) else Var(name=x)


def assign(target, op, lhs, rhs):
    return Assign(target=target, rhs=BinOp(op=op, lhs=atom(lhs), rhs=atom(rhs)))


def step(label, *microsteps):
    """step("X", [st1, st2], [st3]): each list is one microstep."""
    return SchedulingStep(label=label, microsteps=tuple(Microstep(statements=tuple(m)) for m in microsteps))


def _slot(name):
    # Index in 0..7 so every access stays inside a 16-word region
    return BinOp(op="and", lhs=Var(name=name), rhs=Const(value=7))


def random_design(rng: random.Random) -> Ccdfg:
    """
    A pipelinable loop of 2 to 5 steps: phis for one or two carried values in
    the first step, then single-writer temporaries, loads from A or B and
    stores to B. Each carried value gets its next-iteration update in one of
    the later steps.
    """
    length = rng.randint(2, 5)
    labels = [f"S{n}" for n in range(length)]
    carried = ["c0", "c1"][: rng.randint(1, 2)]
    update_step = {name: rng.randint(1, length - 1) for name in carried}

    phis = tuple(
        Phi(target=name, choices=(
            PhiChoice(rhs=rng.choice([Var(name="e"), Const(value=rng.randrange(16))]), pred="Entry"),
            PhiChoice(rhs=Var(name=name + "'"), pred=labels[-1]),
        ))
        for name in carried
    )
    loop = [[Microstep(statements=phis)]]
    defined = list(carried)
    temps = 0
    for index in range(1, length):
        microsteps = []
        for _ in range(rng.randint(1, 2)):
            kind = rng.random()
            source = rng.choice(defined)
            if kind < 0.5:
                st = Assign(target=f"t{temps}", rhs=BinOp(
                    op=rng.choice(OPS), lhs=Var(name=source), rhs=atom(rng.choice([rng.randrange(8), *defined]))))
            elif kind < 0.8:
                st = Assign(target=f"t{temps}", rhs=Load(addr=GetElemPtr(base=rng.choice("AB"), offset=_slot(source))))
            else:
                st = Store(addr=GetElemPtr(base="B", offset=_slot(source)), value=Var(name=rng.choice(defined)))
            microsteps.append(Microstep(statements=(st,)))
            if isinstance(st, Assign):
                defined.append(st.target)
                temps += 1
        for name in carried:
            if update_step[name] == index:
                rhs = BinOp(op=rng.choice(["add", "xor"]), lhs=Var(name=rng.choice(defined)),
                            rhs=Const(value=rng.randrange(1, 8)))
                microsteps.append(Microstep(statements=(Assign(target=name + "'", rhs=rhs),)))
        loop.append(microsteps)

    return Ccdfg(
        pre=(step("Entry", [assign("e", "add", "u", 1)]),),
        loop=tuple(SchedulingStep(label=label, microsteps=tuple(micro)) for label, micro in zip(labels, loop)),
        post=(step("Exit", [assign("r", "add", "c0", 0)]),),
    )
