import os
import sys
from typing import Iterable

import pandas as pd

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path[:0] = [ROOT, os.path.join(ROOT, "src")]

from equiv import zero_state  # noqa: E402
from interp import Trace, run_ccdfg, run_pipelined  # noqa: E402
from ir import Ccdfg  # noqa: E402
from synth import pipeline  # noqa: E402


def latency_table(design: Ccdfg, interval: int, iterations: Iterable[int] = range(1, 9)) -> pd.DataFrame:
    """
    Loop cycles of the sequential design and of its pipeline, measured by
    running both from the zero state for each completed iteration count.
    """
    result = pipeline(design, interval)
    in_flight = result.params.seq_offset
    init = zero_state(design.steps(), design.pre[-1].label if design.pre else None)

    rows = []
    for n in iterations:
        seq_trace = Trace()
        run_ccdfg(design.pre, design.loop, design.post, n, init, None, seq_trace)
        pipelined = None
        # The pipeline always completes at least in_flight + 1 iterations
        if n > in_flight:
            pp_trace = Trace()
            run_pipelined(result.pipelined, n - in_flight, init, None, pp_trace)
            pipelined = pp_trace.latency
        rows.append({"iterations": n, "sequential": seq_trace.latency, "pipelined": pipelined})

    table = pd.DataFrame(rows).set_index("iterations")
    table["pipelined"] = table["pipelined"].astype("Int64")
    table["speedup"] = (table["sequential"] / table["pipelined"].astype("Float64")).round(2)
    return table


if __name__ == "__main__":
    from corpus import load_design  # noqa: E402

    if len(sys.argv) != 3:
        print("usage: latency_report.py DESIGN INTERVAL", file=sys.stderr)
        sys.exit(2)
    print(latency_table(load_design(sys.argv[1]).design, int(sys.argv[2])).to_string())
